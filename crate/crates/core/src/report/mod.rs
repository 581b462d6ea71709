//! End-to-end analysis: data, model, effect sizes, ALE trends, written
//! conclusions and the files that record them.

mod config;
mod json;
mod narrative;
mod render;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    AnalysisConfig, ModelSpec, COULOMB_SOURCE, COULOMB_TARGET, DEFAULT_PERMUTATIONS, DEFAULT_SAMPLE,
    DEFAULT_TRAIN_FRACTION,
};
pub use json::{to_json_string, write_json};
pub use narrative::{direction, narrative, select_cell, Direction, NarrativeCell, NEGATIVE_R2_NARRATIVE};
pub use render::{format_p, render_markdown};
pub use svg::{file_stem, profile_svg};

use crate::ale::{ale_profile, write_profiles_csv, AleProfile};
use crate::data::{apply_scaling, generate_coulomb, load_csv, sample_indices, standardize, train_test_split, DataTable};
use crate::effect_size::{baseline_f2_with_seeds, mse, permutation_f2_with_seeds, BaselineResult, F2Result};
use crate::error::{Context, Error, Result};
use crate::flag::Flag;
use crate::predictor::{CommandPredictor, Predictor};
use crate::regressor::TrainedModel;
use crate::rng::{child_seeds, seeded};
use crate::trend::{mann_kendall, mk_hamed_rao_with, theil_sen_test, MkResult, TheilSenResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const PROFILES_FILE: &str = "ale_profiles.csv";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableEffectReport {
    pub variable: String,
    pub f2: F2Result,
    /// Points in the ALE profile the trend tests ran on.
    pub profile_points: usize,
    pub mann_kendall: MkResult,
    /// Slope per ALE grid step; absent when the profile has fewer than 3 points.
    pub theil_sen: Option<TheilSenResult>,
    /// Slope per raw unit of the variable.
    pub theil_sen_per_unit: Option<TheilSenResult>,
    /// Absent when the model's R² is negative.
    pub cell: Option<NarrativeCell>,
    pub narrative: String,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Trained,
    Loaded,
    Command,
    /// Passed in directly by the caller.
    Provided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub source: ModelSource,
    /// On the explanation sample.
    pub r2: f64,
    pub f2_global: f64,
    pub adjustment: f64,
    /// On rows held out from training, when the model was trained here.
    pub r2_holdout: Option<f64>,
    pub training_seed: Option<u64>,
    pub baseline: BaselineResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub target: String,
    pub features: Vec<String>,
    pub n_rows: usize,
    pub n_train: Option<usize>,
    pub n_holdout: Option<usize>,
    pub n_explain: usize,
    pub notes: Vec<String>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub schema_version: u32,
    pub model: ModelSummary,
    /// In the table's column order.
    pub variables: Vec<VariableEffectReport>,
    /// The run's configuration without its output directory, so that the
    /// report does not depend on where it is written.
    pub config: AnalysisConfig,
    pub metadata: RunMetadata,
}

impl FullReport {
    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableEffectReport> {
        self.variables.iter().find(|v| v.variable == name)
    }
}

/// Everything a run produces; `model` is kept when it was trained here.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: FullReport,
    pub profiles: Vec<AleProfile>,
    pub model: Option<TrainedModel>,
}

/// Random streams consumed by one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSeeds {
    pub permutations: Vec<u64>,
    pub step_bootstrap: u64,
    pub unit_bootstrap: u64,
}

impl VariableSeeds {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, permutations: usize) -> Self {
        let permutations = child_seeds(rng, permutations);
        let [step_bootstrap, unit_bootstrap] = rng.random();
        VariableSeeds {
            permutations,
            step_bootstrap,
            unit_bootstrap,
        }
    }
}

/// Mann-Kendall with the configured lag, shortened for short profiles.
fn trend_test(effects: &[f64], config: &AnalysisConfig) -> Result<MkResult> {
    let max_lag = effects.len().saturating_sub(2).min(config.lag);
    if max_lag == 0 {
        mann_kendall(effects, config.alpha)
    } else {
        mk_hamed_rao_with(effects, max_lag, config.alpha, config.lag_selection)
    }
}

fn slope_test(x: &[f64], y: &[f64], seed: u64, config: &AnalysisConfig) -> Result<Option<TheilSenResult>> {
    if x.len() < 3 {
        return Ok(None);
    }
    theil_sen_test(x, y, config.boot, config.confidence, &mut seeded(seed)).map(Some)
}

/// One variable against a computed baseline, with its seeds drawn from `rng`.
pub fn test_variable<R: Rng + ?Sized>(
    model: &dyn Predictor,
    table: &DataTable,
    var: &str,
    config: &AnalysisConfig,
    baseline: &BaselineResult,
    rng: &mut R,
) -> Result<(VariableEffectReport, AleProfile)> {
    let seeds = VariableSeeds::draw(rng, config.permutations);
    test_variable_with_seeds(model, table, var, config, baseline, &seeds)
}

pub fn test_variable_with_seeds(
    model: &dyn Predictor,
    table: &DataTable,
    var: &str,
    config: &AnalysisConfig,
    baseline: &BaselineResult,
    seeds: &VariableSeeds,
) -> Result<(VariableEffectReport, AleProfile)> {
    let f2 = permutation_f2_with_seeds(model, table, var, &seeds.permutations, baseline)?;
    let profile = ale_profile(model, table, var, config.grid)?;
    let steps: Vec<f64> = (0..profile.effects.len()).map(|i| i as f64).collect();
    let mk = trend_test(&profile.effects, config)?;
    let per_step = slope_test(&steps, &profile.effects, seeds.step_bootstrap, config)?;
    let per_unit = slope_test(&profile.grid, &profile.effects, seeds.unit_bootstrap, config)?;

    let cell = f2.band.map(|band| match &per_step {
        Some(ts) => select_cell(band, mk.p, ts.slope, ts.p, config.alpha),
        None => select_cell(band, mk.p, 0.0, 1.0, config.alpha),
    });
    let text = match cell {
        Some(c) => narrative(c),
        None => NEGATIVE_R2_NARRATIVE,
    };

    let mut flags: Vec<Flag> = f2.flags.iter().chain(&profile.flags).copied().collect();
    if !(mk.p <= config.alpha) {
        flags.push(Flag::NotMonotone);
    }
    flags.sort();
    flags.dedup();

    let report = VariableEffectReport {
        variable: var.to_string(),
        f2,
        profile_points: profile.effects.len(),
        mann_kendall: mk,
        theil_sen: per_step,
        theil_sen_per_unit: per_unit,
        cell,
        narrative: text.to_string(),
        flags,
    };
    Ok((report, profile))
}

fn load_data(config: &AnalysisConfig) -> Result<DataTable> {
    if config.is_generated() {
        let gen = crate::data::CoulombConfig {
            seed: config.seed,
            ..config.coulomb
        };
        generate_coulomb(&gen).context(|| "generating Coulomb data")
    } else {
        let target = config.target_name()?;
        load_csv(&config.data, &target).context(|| format!("loading {}", config.data))
    }
}

struct Prepared {
    table: DataTable,
    model: Box<dyn Predictor>,
    trained: Option<TrainedModel>,
    source: ModelSource,
    r2_holdout: Option<f64>,
    training_seed: Option<u64>,
    n_train: Option<usize>,
    n_holdout: Option<usize>,
}

fn prepare<R: Rng + ?Sized>(raw: &DataTable, config: &AnalysisConfig, rng: &mut R) -> Result<Prepared> {
    match &config.model {
        ModelSpec::Train { mlp } => {
            let (table, _) = standardize(raw).context(|| "standardizing data")?;
            let (train, holdout) = train_test_split(&table, config.train_fraction, rng)?;
            let training_seed: u64 = rng.random();
            let mlp = crate::regressor::MlpConfig {
                seed: training_seed,
                ..mlp.clone()
            };
            let model = TrainedModel::fit(&train, &mlp).context(|| "training the network")?;
            let r2_holdout = 1.0 - mse(&model.predict(&holdout)?, holdout.target()?)?;
            Ok(Prepared {
                table,
                model: Box::new(model.clone()),
                trained: Some(model),
                source: ModelSource::Trained,
                r2_holdout: Some(r2_holdout),
                training_seed: Some(training_seed),
                n_train: Some(train.n_rows()),
                n_holdout: Some(holdout.n_rows()),
            })
        }
        ModelSpec::Load { path } => {
            let model = TrainedModel::load(path).context(|| format!("loading model {}", path.display()))?;
            let table = match model.scaling() {
                Some(params) => apply_scaling(raw, params),
                None => standardize(raw).map(|(t, _)| t),
            }
            .context(|| "standardizing data")?;
            Ok(Prepared {
                table,
                model: Box::new(model),
                trained: None,
                source: ModelSource::Loaded,
                r2_holdout: None,
                training_seed: None,
                n_train: None,
                n_holdout: None,
            })
        }
        ModelSpec::Command { command } => {
            let (table, _) = standardize(raw).context(|| "standardizing data")?;
            let model = CommandPredictor::from_command_line(command, table.feature_names())?;
            Ok(Prepared {
                table,
                model: Box::new(model),
                trained: None,
                source: ModelSource::Command,
                r2_holdout: None,
                training_seed: None,
                n_train: None,
                n_holdout: None,
            })
        }
    }
}

/// Runs the analysis and, when `config.out` is set, writes the report,
/// profiles and plots there.
///
/// The run stream is seeded from `config.seed` and consumed in a fixed
/// order: train/holdout split, training seed, explanation sample, baseline
/// rounds, then each variable in column order.
pub fn run_analysis(config: &AnalysisConfig) -> Result<Analysis> {
    let analysis = analyze(config)?;
    if let Some(dir) = &config.out {
        write_outputs(&analysis, dir)?;
    }
    Ok(analysis)
}

/// [`run_analysis`] without writing anything.
pub fn analyze(config: &AnalysisConfig) -> Result<Analysis> {
    config.validate()?;
    let raw = load_data(config)?;
    let mut rng = seeded(config.seed);
    let prepared = prepare(&raw, config, &mut rng)?;
    let (mut report, profiles) = explain_with(prepared.model.as_ref(), &prepared.table, config, &mut rng)?;
    report.model.source = prepared.source;
    report.model.r2_holdout = prepared.r2_holdout;
    report.model.training_seed = prepared.training_seed;
    report.metadata.n_train = prepared.n_train;
    report.metadata.n_holdout = prepared.n_holdout;
    Ok(Analysis {
        report,
        profiles,
        model: prepared.trained,
    })
}

/// Explains a caller-supplied model on a standardized table. Only the
/// sampling, permutation, grid, trend and seed settings of `config` apply.
pub fn explain(model: &dyn Predictor, table: &DataTable, config: &AnalysisConfig) -> Result<Analysis> {
    config.validate_explanation()?;
    let (report, profiles) = explain_with(model, table, config, &mut seeded(config.seed))?;
    Ok(Analysis {
        report,
        profiles,
        model: None,
    })
}

fn explain_with<R: Rng + ?Sized>(
    model: &dyn Predictor,
    table: &DataTable,
    config: &AnalysisConfig,
    rng: &mut R,
) -> Result<(FullReport, Vec<AleProfile>)> {
    let mut run_flags = Vec::new();
    let n_explain = config.sample.min(table.n_rows());
    if config.sample > table.n_rows() {
        run_flags.push(Flag::SampleClamped);
    }
    let idx = sample_indices(table.n_rows(), n_explain, rng);
    let explain = table.select_rows(&idx)?;

    let baseline_seeds = child_seeds(rng, config.permutations);
    let baseline = baseline_f2_with_seeds(model, &explain, &baseline_seeds).context(|| "baseline permutations")?;
    let features = explain.feature_names();
    let seeds: Vec<VariableSeeds> = if features.len() == 1 {
        // A lone feature shares the baseline's permutations, so its adjusted
        // effect matches the global one exactly.
        let mut s = VariableSeeds::draw(rng, 0);
        s.permutations = baseline_seeds.clone();
        vec![s]
    } else {
        features
            .iter()
            .map(|_| VariableSeeds::draw(rng, config.permutations))
            .collect()
    };

    let results = features
        .par_iter()
        .zip(&seeds)
        .map(|(var, s)| {
            test_variable_with_seeds(model, &explain, var, config, &baseline, s)
                .context(|| format!("variable {var}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let (variables, profiles): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    run_flags.extend(baseline.flags.iter().copied());
    run_flags.sort();
    run_flags.dedup();
    let target = table
        .target_name()
        .ok_or_else(|| Error::MissingTarget(String::new()))?
        .to_string();
    let report = FullReport {
        schema_version: SCHEMA_VERSION,
        model: ModelSummary {
            source: ModelSource::Provided,
            r2: baseline.r2_full,
            f2_global: baseline.f2_global,
            adjustment: baseline.adjustment,
            r2_holdout: None,
            training_seed: None,
            baseline,
        },
        variables,
        config: AnalysisConfig {
            out: None,
            ..config.clone()
        },
        metadata: RunMetadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            target,
            features,
            n_rows: table.n_rows(),
            n_train: None,
            n_holdout: None,
            n_explain,
            notes: table.notes().to_vec(),
            flags: run_flags,
        },
    };
    Ok((report, profiles))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub features: Vec<String>,
    pub target: String,
    pub training_seed: u64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub r2_holdout: f64,
    pub final_loss: f64,
}

/// Trains the network exactly as [`analyze`] would for the same config.
pub fn train(config: &AnalysisConfig) -> Result<(TrainedModel, TrainingSummary)> {
    if !matches!(config.model, ModelSpec::Train { .. }) {
        return Err(Error::InvalidConfig("training needs a `train` model spec".into()));
    }
    config.validate()?;
    let raw = load_data(config)?;
    let p = prepare(&raw, config, &mut seeded(config.seed))?;
    let model = p.trained.expect("train spec yields a trained model");
    let summary = TrainingSummary {
        features: p.table.feature_names(),
        target: config.target_name()?,
        training_seed: p.training_seed.unwrap_or_default(),
        n_train: p.n_train.unwrap_or_default(),
        n_holdout: p.n_holdout.unwrap_or_default(),
        r2_holdout: p.r2_holdout.unwrap_or(f64::NAN),
        final_loss: model.loss_trace().last().copied().unwrap_or(f64::NAN),
    };
    Ok((model, summary))
}

/// Removes everything it created unless `keep` is called.
struct Created {
    files: Vec<PathBuf>,
    dir: Option<PathBuf>,
}

impl Created {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        fs::write(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn keep(mut self) -> Vec<PathBuf> {
        self.dir = None;
        std::mem::take(&mut self.files)
    }
}

impl Drop for Created {
    fn drop(&mut self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(d) = &self.dir {
            let _ = fs::remove_dir(d);
        }
    }
}

fn svg_names(profiles: &[AleProfile]) -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(profiles.len());
    for (i, p) in profiles.iter().enumerate() {
        let mut name = format!("ale_{}.svg", file_stem(&p.variable));
        if names.contains(&name) {
            name = format!("ale_{}_{i}.svg", file_stem(&p.variable));
        }
        names.push(name);
    }
    names
}

fn plot_files(created: &mut Created, profiles: &[AleProfile], dir: &Path) -> Result<()> {
    for (p, name) in profiles.iter().zip(svg_names(profiles)) {
        created.write(dir.join(name), profile_svg(p).as_bytes())?;
    }
    let mut csv = Vec::new();
    write_profiles_csv(&mut csv, profiles)?;
    created.write(dir.join(PROFILES_FILE), &csv)
}

fn begin(dir: &Path) -> Result<Created> {
    let fresh = !dir.exists();
    fs::create_dir_all(dir)?;
    Ok(Created {
        files: Vec::new(),
        dir: fresh.then(|| dir.to_path_buf()),
    })
}

/// One SVG per variable plus the combined profile CSV.
pub fn emit_plots(report: &FullReport, profiles: &[AleProfile], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let names: Vec<&str> = report.variables.iter().map(|v| v.variable.as_str()).collect();
    let found: Vec<&str> = profiles.iter().map(|p| p.variable.as_str()).collect();
    if names != found {
        return Err(Error::SchemaMismatch {
            expected: names.iter().map(|s| s.to_string()).collect(),
            found: found.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut created = begin(dir)?;
    plot_files(&mut created, profiles, dir)?;
    Ok(created.keep())
}

/// Report JSON, plots, profile CSV and, for a model trained here, the model.
pub fn write_outputs(analysis: &Analysis, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut created = begin(dir).context(|| format!("creating {}", dir.display()))?;
    let written = (|| {
        created.write(dir.join(REPORT_FILE), analysis.report.to_json()?.as_bytes())?;
        plot_files(&mut created, &analysis.profiles, dir)?;
        if let Some(m) = &analysis.model {
            let doc = to_json_string(&m.to_document())?;
            created.write(dir.join(MODEL_FILE), doc.as_bytes())?;
        }
        Ok(())
    })();
    written.context(|| format!("writing outputs to {}", dir.display()))?;
    Ok(created.keep())
}
