//! Compiles a C program against the generated header and static library.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests/<name>-<hash> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hypotest.h")).unwrap();
    for name in [
        "ht_table_load_csv",
        "ht_table_from_columns",
        "ht_model_train",
        "ht_model_from_callback",
        "ht_explain",
        "ht_analyze_json",
        "ht_report_to_json",
        "ht_last_error_message",
        "typedef struct HtTable HtTable;",
        "HT_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libhypotest_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    let status = match status {
        Ok(s) => s,
        Err(e) => panic!("C compiler `{cc}` unavailable: {e}"),
    };
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
