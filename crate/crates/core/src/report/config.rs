use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::CoulombConfig;
use crate::error::{Error, Result};
use crate::regressor::MlpConfig;
use crate::trend::{LagSelection, DEFAULT_ALPHA, DEFAULT_BOOTSTRAP, DEFAULT_CONFIDENCE, DEFAULT_LAG};

/// Data source name that selects the built-in Coulomb generator.
pub const COULOMB_SOURCE: &str = "coulomb";
pub const COULOMB_TARGET: &str = "F";

pub const DEFAULT_SAMPLE: usize = 10_000;
pub const DEFAULT_PERMUTATIONS: usize = 50;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Train the built-in network. Its seed is drawn from the run stream, so
    /// `mlp.seed` is ignored here.
    Train {
        #[serde(default)]
        mlp: MlpConfig,
    },
    /// A model document written by `train`.
    Load { path: PathBuf },
    /// A shell command that reads feature rows as CSV on stdin and writes
    /// `row,prediction` CSV on stdout, both in standardized units.
    Command { command: String },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Train { mlp: MlpConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// A CSV path, or `coulomb` for the generator.
    pub data: String,
    /// Defaults to `F` for the generator; required for CSV input.
    pub target: Option<String>,
    /// Generator settings; its `seed` is replaced by the run seed.
    pub coulomb: CoulombConfig,
    pub model: ModelSpec,
    pub train_fraction: f64,
    pub sample: usize,
    pub permutations: usize,
    pub grid: usize,
    pub lag: usize,
    pub lag_selection: LagSelection,
    pub alpha: f64,
    pub boot: usize,
    pub confidence: f64,
    pub seed: u64,
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            data: COULOMB_SOURCE.to_string(),
            target: None,
            coulomb: CoulombConfig::default(),
            model: ModelSpec::default(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            sample: DEFAULT_SAMPLE,
            permutations: DEFAULT_PERMUTATIONS,
            grid: crate::ale::DEFAULT_GRID,
            lag: DEFAULT_LAG,
            lag_selection: LagSelection::default(),
            alpha: DEFAULT_ALPHA,
            boot: DEFAULT_BOOTSTRAP,
            confidence: DEFAULT_CONFIDENCE,
            seed: 0,
            out: None,
        }
    }
}

impl AnalysisConfig {
    pub fn is_generated(&self) -> bool {
        self.data == COULOMB_SOURCE
    }

    pub fn target_name(&self) -> Result<String> {
        match (&self.target, self.is_generated()) {
            (Some(t), _) => Ok(t.clone()),
            (None, true) => Ok(COULOMB_TARGET.to_string()),
            (None, false) => Err(Error::InvalidConfig(format!(
                "no target column given for {}",
                self.data
            ))),
        }
    }

    /// Checks the settings used once a model and table are in hand.
    pub fn validate_explanation(&self) -> Result<()> {
        let counts = [
            ("sample", self.sample),
            ("permutations", self.permutations),
            ("grid", self.grid),
            ("lag", self.lag),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.boot < 100 {
            return Err(Error::InvalidConfig(format!(
                "boot must be at least 100, got {}",
                self.boot
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_explanation()?;
        if let ModelSpec::Train { mlp } = &self.model {
            if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "train_fraction {} outside (0, 1)",
                    self.train_fraction
                )));
            }
            mlp.validate()?;
        }
        self.target_name()?;
        Ok(())
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = AnalysisConfig::default();
        c.validate().unwrap();
        assert_eq!((c.sample, c.permutations, c.grid, c.lag, c.boot), (10_000, 50, 100, 3, 1000));
        assert_eq!(c.target_name().unwrap(), "F");
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = [
            AnalysisConfig { permutations: 0, ..Default::default() },
            AnalysisConfig { alpha: 1.0, ..Default::default() },
            AnalysisConfig { boot: 10, ..Default::default() },
            AnalysisConfig { data: "x.csv".into(), ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn toml_and_json_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("a.toml");
        std::fs::write(
            &t,
            "data = \"d.csv\"\ntarget = \"y\"\npermutations = 7\n[model]\nkind = \"train\"\n[model.mlp]\nepochs = 3\n",
        )
        .unwrap();
        let c = AnalysisConfig::from_file(&t).unwrap();
        assert_eq!(c.permutations, 7);
        assert_eq!(c.sample, DEFAULT_SAMPLE);
        match &c.model {
            ModelSpec::Train { mlp } => assert_eq!(mlp.epochs, 3),
            other => panic!("{other:?}"),
        }
        let j = dir.path().join("b.json");
        std::fs::write(&j, serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(AnalysisConfig::from_file(&j).unwrap(), c);

        std::fs::write(&t, "permutatons = 7\n").unwrap();
        assert!(AnalysisConfig::from_file(&t).is_err());
        assert!(matches!(
            AnalysisConfig::from_file(dir.path().join("none.toml")),
            Err(Error::FileNotFound(_))
        ));
    }
}
