//! First-order accumulated local effect (ALE) profiles.
//!
//! Bin edges are nearest-rank quantiles of the variable. Within each bin the
//! model is evaluated with the variable moved to the bin's lower and upper
//! edge, holding every other column at its observed value; the mean of those
//! local differences is accumulated across bins and the curve is centered so
//! that its occupancy-weighted mean is zero.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{format_f64, DataTable};
use crate::error::{Error, Result};
use crate::flag::Flag;
use crate::predictor::Predictor;

pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AleProfile {
    pub variable: String,
    /// `K + 1` bin edges in the variable's raw units.
    pub grid: Vec<f64>,
    /// The same edges in the units of the table the model was evaluated on.
    pub grid_model_units: Vec<f64>,
    /// Centered accumulated effect at each edge, in prediction units.
    pub effects: Vec<f64>,
    /// Occupancy of bins `1..=K`.
    pub bin_counts: Vec<usize>,
    /// Number of bins originally requested.
    pub requested_bins: usize,
    pub flags: Vec<Flag>,
}

impl AleProfile {
    pub fn bins(&self) -> usize {
        self.bin_counts.len()
    }

    /// `(grid, effect)` pairs in grid order; this is the trend-test input.
    pub fn to_series(&self) -> Vec<(f64, f64)> {
        self.grid.iter().copied().zip(self.effects.iter().copied()).collect()
    }
}

pub fn profile_to_series(profile: &AleProfile) -> Vec<(f64, f64)> {
    profile.to_series()
}

/// Nearest-rank quantile edges at probabilities `j / k`, duplicates removed.
pub fn quantile_edges(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (0..=k)
        .map(|j| {
            let rank = ((j as f64 / k as f64) * n as f64).ceil() as usize;
            sorted[rank.clamp(1, n) - 1]
        })
        .collect();
    edges.dedup();
    edges
}

/// Bin `k` (1-based) holds values in `(edges[k-1], edges[k]]`; the minimum
/// edge itself belongs to bin 1.
fn bin_of(edges: &[f64], x: f64) -> usize {
    let idx = edges.partition_point(|&e| e < x);
    idx.clamp(1, edges.len() - 1)
}

pub fn ale_profile(
    model: &dyn Predictor,
    table: &DataTable,
    var: &str,
    k: usize,
) -> Result<AleProfile> {
    if !table.is_feature(var) {
        return Err(Error::UnknownColumn(var.to_string()));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("ALE grid needs at least one bin".into()));
    }
    let values = table.column(var)?;
    let edges = quantile_edges(values, k);
    if edges.len() < 2 {
        return Err(Error::TooFewDistinctValues {
            column: var.to_string(),
            distinct: edges.len(),
            required: 2,
        });
    }
    let bins = edges.len() - 1;
    let assignment: Vec<usize> = values.iter().map(|&x| bin_of(&edges, x)).collect();

    let lower: Vec<f64> = assignment.iter().map(|&b| edges[b - 1]).collect();
    let upper: Vec<f64> = assignment.iter().map(|&b| edges[b]).collect();
    let lo_pred = model.predict(&table.with_column(var, lower)?)?;
    let hi_pred = model.predict(&table.with_column(var, upper)?)?;

    let mut sums = vec![0.0; bins + 1];
    let mut counts = vec![0usize; bins + 1];
    for ((&b, hi), lo) in assignment.iter().zip(&hi_pred).zip(&lo_pred) {
        sums[b] += hi - lo;
        counts[b] += 1;
    }
    let mut accumulated = vec![0.0; bins + 1];
    for b in 1..=bins {
        let local = if counts[b] > 0 {
            sums[b] / counts[b] as f64
        } else {
            0.0
        };
        accumulated[b] = accumulated[b - 1] + local;
    }
    let total: usize = counts.iter().sum();
    let center = (1..=bins)
        .map(|b| counts[b] as f64 * 0.5 * (accumulated[b - 1] + accumulated[b]))
        .sum::<f64>()
        / total as f64;
    let effects = accumulated.iter().map(|a| a - center).collect();

    let grid = match table.scaling().and_then(|s| s.get(var)) {
        Some(scale) => edges.iter().map(|&z| scale.unscale(z)).collect(),
        None => edges.clone(),
    };
    let mut flags = Vec::new();
    if counts[1..].contains(&0) {
        flags.push(Flag::EmptyBins);
    }
    if bins < k {
        flags.push(Flag::GridReduced);
    }
    Ok(AleProfile {
        variable: var.to_string(),
        grid,
        grid_model_units: edges,
        effects,
        bin_counts: counts[1..].to_vec(),
        requested_bins: k,
        flags,
    })
}

/// Long-format CSV: `variable,grid,effect,bin_count`, where `bin_count` is
/// the occupancy of the bin ending at that edge (0 for the first edge).
pub fn write_profiles_csv<W: Write>(writer: W, profiles: &[AleProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["variable", "grid", "effect", "bin_count"])?;
    for p in profiles {
        for (j, (x, y)) in p.grid.iter().zip(&p.effects).enumerate() {
            let count = if j == 0 { 0 } else { p.bin_counts[j - 1] };
            w.write_record([
                p.variable.clone(),
                format_f64(*x),
                format_f64(*y),
                count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Column};
    use crate::predictor::FnPredictor;
    use crate::rng::seeded;
    use rand::Rng;

    fn table(n: usize, seed: u64) -> DataTable {
        let mut rng = seeded(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|i| a[i] - b[i] + rng.random::<f64>()).collect();
        let t = DataTable::new(
            vec![Column::new("a", a), Column::new("b", b), Column::new("y", y)],
            Some("y"),
        )
        .unwrap();
        standardize(&t).unwrap().0
    }

    fn weighted_center(p: &AleProfile) -> f64 {
        let total: usize = p.bin_counts.iter().sum();
        (1..p.effects.len())
            .map(|b| p.bin_counts[b - 1] as f64 * 0.5 * (p.effects[b - 1] + p.effects[b]))
            .sum::<f64>()
            / total as f64
    }

    #[test]
    fn quantile_edges_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile_edges(&v, 2), vec![1.0, 5.0, 10.0]);
        assert_eq!(quantile_edges(&v, 5), vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(quantile_edges(&[3.0, 3.0, 3.0, 7.0], 4), vec![3.0, 7.0]);
    }

    #[test]
    fn bin_assignment_is_right_closed() {
        let edges = [0.0, 1.0, 2.0];
        assert_eq!(bin_of(&edges, 0.0), 1);
        assert_eq!(bin_of(&edges, 1.0), 1);
        assert_eq!(bin_of(&edges, 1.5), 2);
        assert_eq!(bin_of(&edges, 2.0), 2);
    }

    #[test]
    fn constant_model_is_flat() {
        let t = table(400, 1);
        let m = FnPredictor::new(["a", "b"], |_: &[f64]| 3.0);
        let p = ale_profile(&m, &t, "a", 10).unwrap();
        assert!(p.effects.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn linear_model_gives_linear_profile() {
        let t = table(2000, 2);
        let m = FnPredictor::new(["a", "b"], |r: &[f64]| 2.0 * r[0] + r[1]);
        let p = ale_profile(&m, &t, "a", 20).unwrap();
        assert_eq!(p.grid.len(), 21);
        assert_eq!(p.effects.len(), 21);
        let offset = p.effects[0] - 2.0 * p.grid_model_units[0];
        for (z, e) in p.grid_model_units.iter().zip(&p.effects) {
            assert!((e - (2.0 * z + offset)).abs() < 1e-9);
        }
        assert!(weighted_center(&p).abs() < 1e-9);
        assert_eq!(p.bin_counts.iter().sum::<usize>(), 2000);
    }

    #[test]
    fn grid_is_reported_in_raw_units() {
        let t = table(500, 3);
        let m = FnPredictor::new(["a", "b"], |r: &[f64]| r[0]);
        let p = ale_profile(&m, &t, "a", 10).unwrap();
        assert!(p.grid[0] >= 0.0 && *p.grid.last().unwrap() <= 4.0);
        assert!(p.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn coarse_variable_reduces_grid() {
        let a: Vec<f64> = (0..90).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = (0..90).map(|i| i as f64).collect();
        let t = DataTable::new(vec![Column::new("a", a), Column::new("y", y)], Some("y")).unwrap();
        let m = FnPredictor::new(["a"], |r: &[f64]| r[0] * r[0]);
        let p = ale_profile(&m, &t, "a", 10).unwrap();
        assert_eq!(p.bins(), 2);
        assert!(p.flags.contains(&Flag::GridReduced));
        // bins (0,1] and (1,2] with local differences 1 and 3
        let d: Vec<f64> = p.effects.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(d, vec![1.0, 3.0]);
    }

    #[test]
    fn constant_variable_rejected() {
        let t = DataTable::new(
            vec![Column::new("a", vec![1.0; 5]), Column::new("y", vec![0.0, 1.0, 2.0, 3.0, 4.0])],
            Some("y"),
        )
        .unwrap();
        let m = FnPredictor::new(["a"], |r: &[f64]| r[0]);
        assert!(matches!(
            ale_profile(&m, &t, "a", 4),
            Err(Error::TooFewDistinctValues { .. })
        ));
        assert!(matches!(ale_profile(&m, &t, "q", 4), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn series_preserves_profile() {
        let t = table(300, 4);
        let m = FnPredictor::new(["a", "b"], |r: &[f64]| r[0].sin() + r[1]);
        let p = ale_profile(&m, &t, "b", 4).unwrap();
        let s = profile_to_series(&p);
        assert_eq!(s.len(), 5);
        assert!(s.windows(2).all(|w| w[0].0 < w[1].0));
        let (x, y): (Vec<f64>, Vec<f64>) = s.into_iter().unzip();
        assert_eq!(x, p.grid);
        assert_eq!(y, p.effects);
    }

    #[test]
    fn csv_export_has_one_row_per_edge() {
        let t = table(200, 5);
        let m = FnPredictor::new(["a", "b"], |r: &[f64]| r[0] * r[1]);
        let ps = vec![
            ale_profile(&m, &t, "a", 5).unwrap(),
            ale_profile(&m, &t, "b", 7).unwrap(),
        ];
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &ps).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 + 8);
        assert!(text.starts_with("variable,grid,effect,bin_count\n"));
    }
}
