//! Nonparametric trend inference on ordered series: the Mann-Kendall test
//! (classic and with the Hamed-Rao serial-correlation correction), the
//! Theil-Sen slope with a percentile-bootstrap interval, and the
//! Altman-Bland conversion of that interval to a p-value.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::{child_seeds, seeded};

pub const DEFAULT_LAG: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Redraws allowed for a bootstrap resample whose x values are all equal.
pub const MAX_RESAMPLE_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    NoTrend,
}

/// Which rank autocorrelations enter the Hamed-Rao correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagSelection {
    /// Only lags whose autocorrelation is significant at the test's alpha.
    #[default]
    Significant,
    /// Every lag up to the configured maximum.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkResult {
    pub s: i64,
    /// Variance of S after the tie and serial-correlation corrections.
    pub variance: f64,
    pub variance_uncorrected: f64,
    /// `n / n*`; 1 when no lag enters the correction.
    pub correction_factor: f64,
    pub z: f64,
    pub p: f64,
    pub trend: Trend,
    pub n: usize,
    pub lag: usize,
    pub autocorrelations: Vec<f64>,
    pub lags_used: Vec<usize>,
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `S = Σ_{i<j} sign(y_j - y_i)`.
pub fn mk_s(series: &[f64]) -> Result<i64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    let mut s = 0;
    for i in 0..n - 1 {
        for j in i + 1..n {
            s += sign(series[j] - series[i]);
        }
    }
    Ok(s)
}

/// Extents of groups of exactly equal values.
fn tie_extents(series: &[f64]) -> Vec<usize> {
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(<[f64]>::len)
        .filter(|&t| t > 1)
        .collect()
}

/// `[n(n-1)(2n+5) - Σ t(t-1)(2t+5)] / 18` over tie groups of extent t.
pub fn mk_variance(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    let term = |t: usize| {
        let t = t as f64;
        t * (t - 1.0) * (2.0 * t + 5.0)
    };
    let ties: f64 = tie_extents(series).into_iter().map(term).sum();
    Ok((term(n) - ties) / 18.0)
}

/// 1-based average ranks.
fn ranks(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| series[a].total_cmp(&series[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && series[order[j + 1]] == series[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Sample autocorrelations at lags `1..=max_lag`.
fn autocorrelations(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    (1..=max_lag)
        .map(|k| {
            if denom == 0.0 {
                return 0.0;
            }
            dev[..n - k]
                .iter()
                .zip(&dev[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect()
}

fn standard_normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn continuity_z(s: i64, variance: f64) -> f64 {
    if s == 0 || variance <= 0.0 {
        0.0
    } else if s > 0 {
        (s - 1) as f64 / variance.sqrt()
    } else {
        (s + 1) as f64 / variance.sqrt()
    }
}

fn label(s: i64, p: f64, alpha: f64) -> Trend {
    if p <= alpha && s > 0 {
        Trend::Increasing
    } else if p <= alpha && s < 0 {
        Trend::Decreasing
    } else {
        Trend::NoTrend
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Classic Mann-Kendall test with tie correction and no serial correction.
pub fn mann_kendall(series: &[f64], alpha: f64) -> Result<MkResult> {
    check_alpha(alpha)?;
    let s = mk_s(series)?;
    let variance = mk_variance(series)?;
    let z = continuity_z(s, variance);
    let p = standard_normal_two_sided(z);
    Ok(MkResult {
        s,
        variance,
        variance_uncorrected: variance,
        correction_factor: 1.0,
        z,
        p,
        trend: label(s, p, alpha),
        n: series.len(),
        lag: 0,
        autocorrelations: Vec::new(),
        lags_used: Vec::new(),
    })
}

/// Hamed-Rao variance-corrected Mann-Kendall test over lags `1..=lag`,
/// screening each lag's rank autocorrelation at `alpha`.
pub fn mk_hamed_rao(series: &[f64], lag: usize, alpha: f64) -> Result<MkResult> {
    mk_hamed_rao_with(series, lag, alpha, LagSelection::Significant)
}

pub fn mk_hamed_rao_with(
    series: &[f64],
    lag: usize,
    alpha: f64,
    selection: LagSelection,
) -> Result<MkResult> {
    check_alpha(alpha)?;
    let n = series.len();
    if lag == 0 {
        return Err(Error::InvalidConfig("Hamed-Rao lag must be at least 1".into()));
    }
    if n < lag + 2 {
        return Err(Error::TooShort { len: n, min: lag + 2 });
    }
    let s = mk_s(series)?;
    let variance_uncorrected = mk_variance(series)?;
    let rho = autocorrelations(&ranks(series), lag);
    let bound = normal_quantile(1.0 - alpha / 2.0) / (n as f64).sqrt();
    let lags_used: Vec<usize> = (1..=lag)
        .filter(|&k| match selection {
            LagSelection::All => true,
            LagSelection::Significant => rho[k - 1].abs() > bound,
        })
        .collect();

    let nf = n as f64;
    let sum: f64 = lags_used
        .iter()
        .map(|&k| {
            let m = (n - k) as f64;
            m * (m - 1.0) * (m - 2.0) * rho[k - 1]
        })
        .sum();
    let correction_factor = 1.0 + 2.0 / (nf * (nf - 1.0) * (nf - 2.0)) * sum;
    let variance = if lags_used.is_empty() {
        variance_uncorrected
    } else if correction_factor > 0.0 {
        variance_uncorrected * correction_factor
    } else {
        variance_uncorrected * 1e-6
    };
    let z = continuity_z(s, variance);
    let p = standard_normal_two_sided(z);
    Ok(MkResult {
        s,
        variance,
        variance_uncorrected,
        correction_factor: if lags_used.is_empty() { 1.0 } else { correction_factor },
        z,
        p,
        trend: label(s, p, alpha),
        n,
        lag,
        autocorrelations: rho,
        lags_used,
    })
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn pairwise_slopes(x: &[f64], y: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let n = x.len();
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[j] - x[i];
            if dx != 0.0 {
                out.push((y[j] - y[i]) / dx);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheilSenFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Median of pairwise slopes over pairs with distinct x; intercept is the
/// median of `y - slope * x`.
pub fn theil_sen(x: &[f64], y: &[f64]) -> Result<TheilSenFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort { len: x.len(), min: 2 });
    }
    let mut slopes = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    pairwise_slopes(x, y, &mut slopes);
    if slopes.is_empty() {
        return Err(Error::AllXEqual);
    }
    let slope = median_in_place(&mut slopes);
    let mut resid: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - slope * xi).collect();
    let intercept = median_in_place(&mut resid);
    Ok(TheilSenFit { slope, intercept })
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for the Theil-Sen slope, resampling whole
/// `(x, y)` points.
pub fn theil_sen_ci<R: rand::Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    n_boot: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n < 3 {
        return Err(Error::TooShort { len: n, min: 3 });
    }
    if n_boot < 100 {
        return Err(Error::InvalidConfig(format!(
            "{n_boot} bootstrap resamples requested, at least 100 required"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence {confidence} outside (0, 1)")));
    }
    let seeds = child_seeds(rng, n_boot);
    let mut slopes = seeds
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(bx, by, buf), &seed| {
                let mut r = seeded(seed);
                for _ in 0..=MAX_RESAMPLE_RETRIES {
                    bx.clear();
                    by.clear();
                    for _ in 0..n {
                        let i = r.random_range(0..n);
                        bx.push(x[i]);
                        by.push(y[i]);
                    }
                    pairwise_slopes(bx, by, buf);
                    if !buf.is_empty() {
                        return Ok(median_in_place(buf));
                    }
                }
                Err(Error::DegenerateResampling {
                    retries: MAX_RESAMPLE_RETRIES,
                })
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    slopes.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Ok((quantile_sorted(&slopes, tail), quantile_sorted(&slopes, 1.0 - tail)))
}

/// Two-sided critical value; exactly 1.96 at 95%.
fn critical_value(confidence: f64) -> f64 {
    if (confidence - 0.95).abs() < 1e-12 {
        1.96
    } else {
        normal_quantile(1.0 - (1.0 - confidence) / 2.0)
    }
}

/// Approximate p-value of `estimate` from its confidence interval:
/// `SE = width / (2 z_crit)`, `z = |estimate| / SE`,
/// `p = exp(-0.717 z - 0.416 z²)`.
pub fn p_from_ci(estimate: f64, ci_low: f64, ci_high: f64, confidence: f64) -> Result<f64> {
    if !(ci_low.is_finite() && ci_high.is_finite() && estimate.is_finite()) || ci_low > ci_high {
        return Err(Error::InvalidInterval {
            low: ci_low,
            high: ci_high,
        });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence {confidence} outside (0, 1)")));
    }
    let se = (ci_high - ci_low) / (2.0 * critical_value(confidence));
    if se == 0.0 {
        return Ok(if estimate == 0.0 { 1.0 } else { 0.0 });
    }
    let z = estimate.abs() / se;
    Ok((-0.717 * z - 0.416 * z * z).exp().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheilSenResult {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p: f64,
    pub n_boot: usize,
    pub confidence: f64,
}

/// Slope, bootstrap interval and interval-derived p-value in one call.
pub fn theil_sen_test<R: rand::Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    n_boot: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<TheilSenResult> {
    let fit = theil_sen(x, y)?;
    let (ci_low, ci_high) = theil_sen_ci(x, y, n_boot, confidence, rng)?;
    let p = p_from_ci(fit.slope, ci_low, ci_high, confidence)?;
    Ok(TheilSenResult {
        slope: fit.slope,
        intercept: fit.intercept,
        ci_low,
        ci_high,
        p,
        n_boot,
        confidence,
    })
}
