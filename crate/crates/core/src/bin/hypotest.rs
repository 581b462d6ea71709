use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hypotest::data::{generate_coulomb, CoulombConfig, DEFAULT_R_FLOOR};
use hypotest::report::{
    render_markdown, run_analysis, to_json_string, train, AnalysisConfig, FullReport, ModelSpec,
    COULOMB_SOURCE, REPORT_FILE,
};
use hypotest::trend::LagSelection;
use hypotest::{Error, Result};

#[derive(Parser)]
#[command(name = "hypotest", version, about = "Hypothesis tests on trained regression models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Coulomb's-law table as CSV.
    Generate {
        #[arg(long, default_value_t = 125_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smallest separation sampled.
        #[arg(long, default_value_t = DEFAULT_R_FLOOR)]
        r_floor: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the network and save it as a model document.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full analysis and write report, profiles and plots.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        lag: Option<usize>,
        #[arg(long, value_enum)]
        lag_selection: Option<LagChoice>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        boot: Option<usize>,
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Use a saved model document instead of training.
        #[arg(long, conflicts_with = "model_cmd")]
        model: Option<PathBuf>,
        /// Shell command serving predictions (CSV rows on stdin, `row,prediction` on stdout).
        #[arg(long)]
        model_cmd: Option<String>,
        /// Output directory; the report goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a report as a table.
    Report {
        /// A report file, or a directory holding one.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
}

#[derive(clap::Args)]
struct Common {
    /// TOML or JSON file supplying any of the options; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path, or `coulomb` for generated data.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum LagChoice {
    Significant,
    All,
}

fn base_config(common: &Common) -> Result<AnalysisConfig> {
    let mut c = match &common.config {
        Some(path) => AnalysisConfig::from_file(path)?,
        None => AnalysisConfig::default(),
    };
    if let Some(d) = &common.data {
        c.data = d.clone();
    }
    if let Some(t) = &common.target {
        c.target = Some(t.clone());
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    Ok(c)
}

fn set_epochs(c: &mut AnalysisConfig, epochs: Option<usize>) {
    if let (Some(e), ModelSpec::Train { mlp }) = (epochs, &mut c.model) {
        mlp.epochs = e;
    }
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, seed, r_floor, out } => {
            let table = generate_coulomb(&CoulombConfig {
                n_tuples: n,
                seed,
                r_floor,
                ..Default::default()
            })?;
            for note in table.notes() {
                eprintln!("note: {note}");
            }
            match out {
                Some(path) => table.write_csv(path),
                None => table.to_csv_writer(std::io::stdout().lock()),
            }
        }
        Command::Train { common, epochs, train_fraction, out } => {
            let mut c = base_config(&common)?;
            if !matches!(c.model, ModelSpec::Train { .. }) {
                c.model = ModelSpec::default();
            }
            set_epochs(&mut c, epochs);
            if let Some(f) = train_fraction {
                c.train_fraction = f;
            }
            let (model, summary) = train(&c)?;
            model.save(&out)?;
            print(&to_json_string(&summary)?)
        }
        Command::Analyze {
            common,
            permutations,
            grid,
            lag,
            lag_selection,
            alpha,
            boot,
            sample,
            epochs,
            train_fraction,
            model,
            model_cmd,
            out,
        } => {
            let mut c = base_config(&common)?;
            if let Some(path) = model {
                c.model = ModelSpec::Load { path };
            }
            if let Some(command) = model_cmd {
                c.model = ModelSpec::Command { command };
            }
            set_epochs(&mut c, epochs);
            let overrides = [
                (permutations, &mut c.permutations),
                (grid, &mut c.grid),
                (lag, &mut c.lag),
                (boot, &mut c.boot),
                (sample, &mut c.sample),
            ];
            for (flag, field) in overrides {
                if let Some(v) = flag {
                    *field = v;
                }
            }
            if let Some(a) = alpha {
                c.alpha = a;
            }
            if let Some(f) = train_fraction {
                c.train_fraction = f;
            }
            if let Some(l) = lag_selection {
                c.lag_selection = match l {
                    LagChoice::Significant => LagSelection::Significant,
                    LagChoice::All => LagSelection::All,
                };
            }
            if out.is_some() {
                c.out = out;
            }
            if c.data != COULOMB_SOURCE && c.target.is_none() {
                return Err(Error::InvalidConfig("--target is required for CSV data".into()));
            }
            let analysis = run_analysis(&c)?;
            match &c.out {
                Some(dir) => {
                    eprintln!("wrote {}", dir.join(REPORT_FILE).display());
                    Ok(())
                }
                None => print(&analysis.report.to_json()?),
            }
        }
        Command::Report { input, format } => {
            let path = if input.is_dir() { input.join(REPORT_FILE) } else { input };
            let report = FullReport::load(path)?;
            match format {
                Format::Markdown => print(&render_markdown(&report)),
                Format::Json => print(&report.to_json()?),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "code": e.code(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
