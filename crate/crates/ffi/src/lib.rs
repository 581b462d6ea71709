//! C interface to `hypotest`.
//!
//! Tables, models and reports are opaque handles created by `ht_*` functions
//! and released with the matching `*_free`. Fallible calls return an
//! [`HtStatus`]; on failure the message and the stable error code of the most
//! recent failure on the calling thread are available from
//! [`ht_last_error_message`] and [`ht_last_error_code`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hypotest::data::{generate_coulomb, load_csv, standardize, Column, CoulombConfig, DataTable};
use hypotest::predictor::Predictor;
use hypotest::regressor::{MlpConfig, TrainedModel};
use hypotest::report::{
    self, explain, run_analysis, write_outputs, Analysis, AnalysisConfig, Direction,
};
use hypotest::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    FileNotFound = 3,
    Io = 4,
    Parse = 5,
    InvalidData = 6,
    InvalidConfig = 7,
    Numerical = 8,
    External = 9,
    OutOfRange = 10,
    Panic = 11,
}

impl HtStatus {
    fn of(e: &Error) -> Self {
        match e.code() {
            "file_not_found" => HtStatus::FileNotFound,
            "io" => HtStatus::Io,
            "parse" | "json" => HtStatus::Parse,
            "invalid_config" | "invalid_range" => HtStatus::InvalidConfig,
            "non_finite_loss" | "degenerate_model" | "zero_baseline" | "non_finite"
            | "degenerate_resampling" | "invalid_interval" => HtStatus::Numerical,
            "external" => HtStatus::External,
            _ => HtStatus::InvalidData,
        }
    }
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_error(code: &str, message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("NULs removed");
    let code = CString::new(code).expect("static code");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code, message }));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Failure carried out of an FFI body.
enum Fail {
    Status(HtStatus, &'static str, String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(HtStatus::NullPointer, "null_pointer", format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> HtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            clear_error();
            HtStatus::Ok
        }
        Ok(Err(Fail::Status(status, code, message))) => {
            set_error(code, message);
            status
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.code(), e.to_string());
            HtStatus::of(&e)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error("panic", message);
            HtStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail::Status(HtStatus::InvalidUtf8, "invalid_utf8", format!("{what} is not UTF-8"))
    })
}

unsafe fn read_names(p: *const *const c_char, n: usize) -> Result<Vec<String>, Fail> {
    if p.is_null() {
        return Err(null("names"));
    }
    (0..n).map(|i| text(*p.add(i), "name").map(str::to_string)).collect()
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s)
        .map_err(|_| Fail::Status(HtStatus::InvalidData, "invalid_data", "string contains NUL".into()))?
        .into_raw();
    Ok(())
}

// ---------------------------------------------------------------------------
// errors and strings

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ht_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL after a success.
/// Valid until the next `ht_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ht_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Stable snake_case code of the last failure on this thread, or NULL.
#[no_mangle]
pub extern "C" fn ht_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.code.as_ptr()))
}

/// # Safety
/// `s` must come from a `ht_*` function that returns an owned string, and
/// must not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ht_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// tables

pub struct HtTable {
    inner: DataTable,
}

/// # Safety
/// `path` and `target` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_table_load_csv(
    path: *const c_char,
    target: *const c_char,
    out: *mut *mut HtTable,
) -> HtStatus {
    guard(|| {
        let t = load_csv(text(path, "path")?, text(target, "target")?)?;
        put(out, HtTable { inner: t })
    })
}

/// Builds a table from `n_columns` column-major arrays of `n_rows` values.
/// `target` may be NULL for a table without a target.
///
/// # Safety
/// `column_names` must hold `n_columns` strings and `values` `n_columns * n_rows`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_table_from_columns(
    column_names: *const *const c_char,
    n_columns: usize,
    values: *const f64,
    n_rows: usize,
    target: *const c_char,
    out: *mut *mut HtTable,
) -> HtStatus {
    guard(|| {
        let names = read_names(column_names, n_columns)?;
        if values.is_null() {
            return Err(null("values"));
        }
        let all = std::slice::from_raw_parts(values, n_columns * n_rows);
        let columns = names
            .into_iter()
            .zip(all.chunks(n_rows.max(1)))
            .map(|(n, v)| Column::new(n, v.to_vec()))
            .collect();
        let target = if target.is_null() { None } else { Some(text(target, "target")?) };
        put(out, HtTable { inner: DataTable::new(columns, target)? })
    })
}

/// Synthetic Coulomb's-law table with the default ranges.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_table_generate_coulomb(n_rows: usize, seed: u64, out: *mut *mut HtTable) -> HtStatus {
    guard(|| {
        let t = generate_coulomb(&CoulombConfig {
            n_tuples: n_rows,
            seed,
            ..Default::default()
        })?;
        put(out, HtTable { inner: t })
    })
}

/// Z-scored copy of every column, the target included.
///
/// # Safety
/// `table` must be a live table handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_table_standardize(table: *const HtTable, out: *mut *mut HtTable) -> HtStatus {
    guard(|| {
        let (t, _) = standardize(&handle(table, "table")?.inner)?;
        put(out, HtTable { inner: t })
    })
}

/// # Safety
/// `table` must be a live table handle or NULL (gives 0).
#[no_mangle]
pub unsafe extern "C" fn ht_table_n_rows(table: *const HtTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.n_rows())
}

/// # Safety
/// `table` must be a live table handle or NULL (gives 0).
#[no_mangle]
pub unsafe extern "C" fn ht_table_n_columns(table: *const HtTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.columns().len())
}

/// # Safety
/// `table` must come from a `ht_table_*` constructor and not be used
/// afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ht_table_free(table: *mut HtTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

// ---------------------------------------------------------------------------
// models

/// Fills `out[0..n_rows]` with predictions for `n_rows` row-major rows of
/// `n_features` values. Returns 0 on success. May be called from several
/// threads at once.
pub type HtPredictFn = Option<
    unsafe extern "C" fn(user_data: *mut c_void, rows: *const f64, n_rows: usize, n_features: usize, out: *mut f64) -> i32,
>;

struct CallbackPredictor {
    features: Vec<String>,
    callback: unsafe extern "C" fn(*mut c_void, *const f64, usize, usize, *mut f64) -> i32,
    user_data: *mut c_void,
}

// The caller promises a thread-safe callback and user_data.
unsafe impl Send for CallbackPredictor {}
unsafe impl Sync for CallbackPredictor {}

impl Predictor for CallbackPredictor {
    fn feature_names(&self) -> &[String] {
        &self.features
    }

    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> hypotest::Result<Vec<f64>> {
        let mut out = vec![f64::NAN; n_rows];
        let rc = unsafe {
            (self.callback)(self.user_data, rows.as_ptr(), n_rows, self.features.len(), out.as_mut_ptr())
        };
        if rc != 0 {
            return Err(Error::External(format!("prediction callback returned {rc}")));
        }
        Ok(out)
    }
}

enum ModelKind {
    Trained(TrainedModel),
    Callback(CallbackPredictor),
}

pub struct HtModel {
    inner: ModelKind,
}

impl HtModel {
    fn predictor(&self) -> &dyn Predictor {
        match &self.inner {
            ModelKind::Trained(m) => m,
            ModelKind::Callback(c) => c,
        }
    }
}

/// Trains the default network on a standardized table. `epochs` of 0 keeps
/// the default.
///
/// # Safety
/// `table` must be a live table handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_model_train(
    table: *const HtTable,
    epochs: usize,
    seed: u64,
    out: *mut *mut HtModel,
) -> HtStatus {
    guard(|| {
        let defaults = MlpConfig::default();
        let config = MlpConfig {
            epochs: if epochs == 0 { defaults.epochs } else { epochs },
            seed,
            ..defaults
        };
        let m = TrainedModel::fit(&handle(table, "table")?.inner, &config)?;
        put(out, HtModel { inner: ModelKind::Trained(m) })
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_model_load(path: *const c_char, out: *mut *mut HtModel) -> HtStatus {
    guard(|| {
        let m = TrainedModel::load(text(path, "path")?)?;
        put(out, HtModel { inner: ModelKind::Trained(m) })
    })
}

/// Saves a trained model; callback models cannot be saved.
///
/// # Safety
/// `model` must be a live model handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ht_model_save(model: *const HtModel, path: *const c_char) -> HtStatus {
    guard(|| match &handle(model, "model")?.inner {
        ModelKind::Trained(m) => Ok(m.save(text(path, "path")?)?),
        ModelKind::Callback(_) => Err(Fail::Status(
            HtStatus::InvalidData,
            "invalid_data",
            "a callback model has nothing to save".into(),
        )),
    })
}

/// Wraps a foreign model. Features are passed to `callback` in the order of
/// `feature_names`, in standardized units.
///
/// # Safety
/// `feature_names` must hold `n_features` strings. `callback` and
/// `user_data` must stay valid, and be safe to use from several threads,
/// for as long as the model handle lives.
#[no_mangle]
pub unsafe extern "C" fn ht_model_from_callback(
    feature_names: *const *const c_char,
    n_features: usize,
    callback: HtPredictFn,
    user_data: *mut c_void,
    out: *mut *mut HtModel,
) -> HtStatus {
    guard(|| {
        let callback = callback.ok_or_else(|| null("callback"))?;
        let predictor = CallbackPredictor {
            features: read_names(feature_names, n_features)?,
            callback,
            user_data,
        };
        put(out, HtModel { inner: ModelKind::Callback(predictor) })
    })
}

/// Writes one prediction per table row into `out`, which holds `len` doubles.
///
/// # Safety
/// Handles must be live; `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ht_model_predict(
    model: *const HtModel,
    table: *const HtTable,
    out: *mut f64,
    len: usize,
) -> HtStatus {
    guard(|| {
        let t = &handle(table, "table")?.inner;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if len < t.n_rows() {
            return Err(Error::LengthMismatch { left: len, right: t.n_rows() }.into());
        }
        let p = handle(model, "model")?.predictor().predict(t)?;
        std::slice::from_raw_parts_mut(out, p.len()).copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `model` must come from a `ht_model_*` constructor and not be used
/// afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ht_model_free(model: *mut HtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---------------------------------------------------------------------------
// analysis

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtOptions {
    pub sample: usize,
    pub permutations: usize,
    pub grid: usize,
    pub lag: usize,
    pub alpha: f64,
    pub boot: usize,
    pub seed: u64,
}

/// Default explanation settings.
#[no_mangle]
pub extern "C" fn ht_options_default() -> HtOptions {
    let c = AnalysisConfig::default();
    HtOptions {
        sample: c.sample,
        permutations: c.permutations,
        grid: c.grid,
        lag: c.lag,
        alpha: c.alpha,
        boot: c.boot,
        seed: c.seed,
    }
}

pub struct HtReport {
    inner: Analysis,
}

/// Explains `model` on a standardized `table`. `options` may be NULL for
/// the defaults.
///
/// # Safety
/// Handles must be live; `options` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_explain(
    model: *const HtModel,
    table: *const HtTable,
    options: *const HtOptions,
    out: *mut *mut HtReport,
) -> HtStatus {
    guard(|| {
        let o = options.as_ref().copied().unwrap_or_else(|| ht_options_default());
        let config = AnalysisConfig {
            sample: o.sample,
            permutations: o.permutations,
            grid: o.grid,
            lag: o.lag,
            alpha: o.alpha,
            boot: o.boot,
            seed: o.seed,
            ..Default::default()
        };
        let m = handle(model, "model")?.predictor();
        let a = explain(m, &handle(table, "table")?.inner, &config)?;
        put(out, HtReport { inner: a })
    })
}

/// Full run from a JSON analysis configuration, as accepted by the CLI's
/// `--config`. Outputs are written when the configuration names a directory.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_analyze_json(config_json: *const c_char, out: *mut *mut HtReport) -> HtStatus {
    guard(|| {
        let config: AnalysisConfig =
            serde_json::from_str(text(config_json, "config")?).map_err(Error::from)?;
        put(out, HtReport { inner: run_analysis(&config)? })
    })
}

/// The report as JSON; free the string with [`ht_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_report_to_json(report: *const HtReport, out: *mut *mut c_char) -> HtStatus {
    guard(|| put_string(out, handle(report, "report")?.inner.report.to_json()?))
}

/// Writes report, profile CSV and plots into `dir`.
///
/// # Safety
/// `report` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ht_report_write(report: *const HtReport, dir: *const c_char) -> HtStatus {
    guard(|| {
        let r = handle(report, "report")?;
        write_outputs(&r.inner, PathBuf::from(text(dir, "dir")?))?;
        Ok(())
    })
}

/// Model R² on the explanation sample; NaN for NULL.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ht_report_r2(report: *const HtReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.report.model.r2)
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ht_report_f2_global(report: *const HtReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.report.model.f2_global)
}

/// # Safety
/// `report` must be a live handle or NULL (gives 0).
#[no_mangle]
pub unsafe extern "C" fn ht_report_n_variables(report: *const HtReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.report.variables.len())
}

/// Effect band: -1 withheld, 0 trivial, 1 small, 2 medium, 3 large.
/// Direction: 0 negative, 1 positive, 2 not monotone, 3 undetermined,
/// -1 withheld. Slope fields are NaN when no slope was fitted.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtVariableSummary {
    pub f2_raw: f64,
    pub f2_adjusted: f64,
    pub band: i32,
    pub direction: i32,
    pub mk_s: i64,
    pub mk_p: f64,
    pub slope: f64,
    pub slope_p: f64,
    pub slope_per_unit: f64,
}

fn variable(r: &HtReport, index: usize) -> Result<&report::VariableEffectReport, Fail> {
    r.inner.report.variables.get(index).ok_or_else(|| {
        Fail::Status(
            HtStatus::OutOfRange,
            "out_of_range",
            format!("variable index {index} of {}", r.inner.report.variables.len()),
        )
    })
}

/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_report_variable(
    report: *const HtReport,
    index: usize,
    out: *mut HtVariableSummary,
) -> HtStatus {
    guard(|| {
        let v = variable(handle(report, "report")?, index)?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let direction = v.cell.map_or(-1, |c| match c.direction {
            Direction::Negative => 0,
            Direction::Positive => 1,
            Direction::NotMonotone => 2,
            Direction::Undetermined => 3,
        });
        *out = HtVariableSummary {
            f2_raw: v.f2.f2_raw,
            f2_adjusted: v.f2.f2_adjusted,
            band: v.f2.band.map_or(-1, |b| b as i32),
            direction,
            mk_s: v.mann_kendall.s,
            mk_p: v.mann_kendall.p,
            slope: v.theil_sen.as_ref().map_or(f64::NAN, |t| t.slope),
            slope_p: v.theil_sen.as_ref().map_or(f64::NAN, |t| t.p),
            slope_per_unit: v.theil_sen_per_unit.as_ref().map_or(f64::NAN, |t| t.slope),
        };
        Ok(())
    })
}

/// Name of variable `index`; free with [`ht_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_report_variable_name(
    report: *const HtReport,
    index: usize,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| put_string(out, variable(handle(report, "report")?, index)?.variable.clone()))
}

/// Written conclusion for variable `index`; free with [`ht_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_report_variable_narrative(
    report: *const HtReport,
    index: usize,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| put_string(out, variable(handle(report, "report")?, index)?.narrative.clone()))
}

/// # Safety
/// `report` must come from `ht_explain` or `ht_analyze_json` and not be
/// used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ht_report_free(report: *mut HtReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
