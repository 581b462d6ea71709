//! Permutation-based Cohen's f² per variable, adjusted against an
//! all-columns-permuted baseline.
//!
//! For a standardized target, `R² = 1 - MSE`. Permuting one feature column
//! and averaging the loss over `B` rounds gives `R_V²`; the raw effect is
//! `(R² - R_V²) / (1 - R²)`. Because permutation exaggerates the loss,
//! every raw effect is rescaled by `a = f² / f_base²`, where `f² = R² / (1 - R²)`
//! is the global effect and `f_base²` the raw effect of permuting every
//! column at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{permute_all_columns, permute_column, DataTable};
use crate::error::{Error, Result};
use crate::flag::Flag;
use crate::predictor::Predictor;
use crate::rng::{child_seeds, seeded};

/// R² at or above `1 - DEGENERATE_GAP` leaves nothing to divide by.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// Relative Monte-Carlo error of the mean round loss above which results
/// are flagged [`Flag::WideMonteCarlo`].
pub const MONTE_CARLO_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectBand {
    Trivial,
    Small,
    Medium,
    Large,
}

impl EffectBand {
    pub const ALL: [EffectBand; 4] = [
        EffectBand::Trivial,
        EffectBand::Small,
        EffectBand::Medium,
        EffectBand::Large,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EffectBand::Trivial => "trivial",
            EffectBand::Small => "small",
            EffectBand::Medium => "medium",
            EffectBand::Large => "large",
        }
    }
}

/// Cohen's thresholds 0.02 / 0.15 / 0.35, lower bounds inclusive. Negative
/// values fall in [`EffectBand::Trivial`].
pub fn classify_effect(f2: f64) -> Result<EffectBand> {
    if !f2.is_finite() {
        return Err(Error::NonFinite(format!("effect size {f2}")));
    }
    Ok(if f2 < 0.02 {
        EffectBand::Trivial
    } else if f2 < 0.15 {
        EffectBand::Small
    } else if f2 < 0.35 {
        EffectBand::Medium
    } else {
        EffectBand::Large
    })
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// `1 - mse`, valid only when the table's target is standardized.
pub fn r2_from_mse(mse_value: f64, table: &DataTable) -> Result<f64> {
    let target = table
        .target_name()
        .ok_or_else(|| Error::MissingTarget(String::new()))?;
    if !table.is_standardized(target) {
        return Err(Error::UnstandardizedTarget(target.to_string()));
    }
    Ok(1.0 - mse_value)
}

/// Outcome of permuting every feature column at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub mse_full: f64,
    pub r2_full: f64,
    pub r2_base: f64,
    pub f2_base: f64,
    pub f2_global: f64,
    pub adjustment: f64,
    pub permutations: usize,
    pub round_mse: Vec<f64>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F2Result {
    pub variable: String,
    pub r2_full: f64,
    pub r2_permuted: f64,
    pub f2_raw: f64,
    pub f2_adjusted: f64,
    /// Withheld when the model's R² is negative.
    pub band: Option<EffectBand>,
    pub permutations: usize,
    pub round_mse: Vec<f64>,
    /// Standard error of `f2_raw` across rounds; absent for a single round.
    pub f2_raw_standard_error: Option<f64>,
    pub flags: Vec<Flag>,
}

/// Mean, and standard error of the mean (sample sd / sqrt(n)) when n ≥ 2.
fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Mean of `round - reference`. Equals `mean(round) - reference`, but is
/// exactly zero when every round reproduces the reference loss.
fn mean_excess(round_mse: &[f64], reference: f64) -> f64 {
    round_mse.iter().map(|m| m - reference).sum::<f64>() / round_mse.len() as f64
}

fn monte_carlo_flag(round_mse: &[f64]) -> Option<Flag> {
    let (mean, se) = mean_and_se(round_mse);
    match se {
        None => Some(Flag::WideMonteCarlo),
        Some(se) if mean > 0.0 && se >= MONTE_CARLO_TOLERANCE * mean => Some(Flag::WideMonteCarlo),
        _ => None,
    }
}

fn unpermuted_fit(model: &dyn Predictor, table: &DataTable) -> Result<(f64, f64)> {
    let target = table.target()?;
    let m = mse(&model.predict(table)?, target)?;
    let r2 = r2_from_mse(m, table)?;
    if r2 >= 1.0 - DEGENERATE_GAP {
        return Err(Error::DegenerateModel { r2 });
    }
    Ok((m, r2))
}

fn round_losses<F>(model: &dyn Predictor, table: &DataTable, seeds: &[u64], permute: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<DataTable> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one permutation round required".into()));
    }
    let target = table.target()?;
    seeds
        .par_iter()
        .map(|&s| {
            let permuted = permute(s)?;
            mse(&model.predict(&permuted)?, target)
        })
        .collect()
}

/// Baseline over `b` rounds; one child seed per round is drawn from `rng`.
pub fn baseline_f2<R: rand::Rng + ?Sized>(
    model: &dyn Predictor,
    table: &DataTable,
    b: usize,
    rng: &mut R,
) -> Result<BaselineResult> {
    if b == 0 {
        return Err(Error::InvalidConfig("at least one permutation round required".into()));
    }
    baseline_f2_with_seeds(model, table, &child_seeds(rng, b))
}

pub fn baseline_f2_with_seeds(
    model: &dyn Predictor,
    table: &DataTable,
    seeds: &[u64],
) -> Result<BaselineResult> {
    let (mse_full, r2_full) = unpermuted_fit(model, table)?;
    let round_mse = round_losses(model, table, seeds, |s| {
        Ok(permute_all_columns(table, &mut seeded(s)))
    })?;
    let excess = mean_excess(&round_mse, mse_full);
    let r2_base = 1.0 - (mse_full + excess);
    let f2_base = excess / (1.0 - r2_full);
    if f2_base == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    let f2_global = r2_full / (1.0 - r2_full);
    let mut flags: Vec<Flag> = monte_carlo_flag(&round_mse).into_iter().collect();
    if r2_full < 0.0 {
        flags.insert(0, Flag::NegativeR2);
    }
    Ok(BaselineResult {
        mse_full,
        r2_full,
        r2_base,
        f2_base,
        f2_global,
        adjustment: f2_global / f2_base,
        permutations: seeds.len(),
        round_mse,
        flags,
    })
}

/// Effect of `var` over `b` rounds, adjusted by `baseline`.
pub fn permutation_f2<R: rand::Rng + ?Sized>(
    model: &dyn Predictor,
    table: &DataTable,
    var: &str,
    b: usize,
    rng: &mut R,
    baseline: &BaselineResult,
) -> Result<F2Result> {
    if b == 0 {
        return Err(Error::InvalidConfig("at least one permutation round required".into()));
    }
    if !table.is_feature(var) {
        return Err(Error::UnknownColumn(var.to_string()));
    }
    permutation_f2_with_seeds(model, table, var, &child_seeds(rng, b), baseline)
}

pub fn permutation_f2_with_seeds(
    model: &dyn Predictor,
    table: &DataTable,
    var: &str,
    seeds: &[u64],
    baseline: &BaselineResult,
) -> Result<F2Result> {
    if !table.is_feature(var) {
        return Err(Error::UnknownColumn(var.to_string()));
    }
    let (mse_full, r2_full) = unpermuted_fit(model, table)?;
    let round_mse = round_losses(model, table, seeds, |s| {
        permute_column(table, var, &mut seeded(s))
    })?;
    let excess = mean_excess(&round_mse, mse_full);
    let r2_permuted = 1.0 - (mse_full + excess);
    let f2_raw = excess / (1.0 - r2_full);
    let f2_adjusted = baseline.adjustment * f2_raw;

    let per_round: Vec<f64> = round_mse
        .iter()
        .map(|m| (m - mse_full) / (1.0 - r2_full))
        .collect();
    let (_, f2_raw_standard_error) = mean_and_se(&per_round);

    let mut flags = Vec::new();
    let band = if r2_full < 0.0 {
        flags.push(Flag::NegativeR2);
        None
    } else {
        Some(classify_effect(f2_adjusted)?)
    };
    if f2_adjusted < 0.0 {
        flags.push(Flag::NegativeEffect);
    }
    flags.extend(monte_carlo_flag(&round_mse));
    Ok(F2Result {
        variable: var.to_string(),
        r2_full,
        r2_permuted,
        f2_raw,
        f2_adjusted,
        band,
        permutations: seeds.len(),
        round_mse,
        f2_raw_standard_error,
        flags,
    })
}
