//! Written conclusions for one variable, chosen from a fixed grid of
//! effect band against monotonicity and direction.

use serde::{Deserialize, Serialize};

use crate::effect_size::EffectBand;

/// Row of the reporting grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Significant trend, significant negative slope.
    Negative,
    /// Significant trend, significant positive slope.
    Positive,
    /// Trend test not significant.
    NotMonotone,
    /// Significant trend whose slope is zero or not significant.
    Undetermined,
}

impl Direction {
    pub const GRID: [Direction; 3] = [Direction::Negative, Direction::Positive, Direction::NotMonotone];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NarrativeCell {
    pub band: EffectBand,
    pub direction: Direction,
}

/// Picks the grid row. A non-significant trend test wins regardless of slope.
pub fn direction(mk_p: f64, slope: f64, slope_p: f64, alpha: f64) -> Direction {
    if !(mk_p <= alpha) {
        Direction::NotMonotone
    } else if !(slope_p <= alpha) || slope == 0.0 {
        Direction::Undetermined
    } else if slope < 0.0 {
        Direction::Negative
    } else {
        Direction::Positive
    }
}

pub fn select_cell(band: EffectBand, mk_p: f64, slope: f64, slope_p: f64, alpha: f64) -> NarrativeCell {
    NarrativeCell {
        band,
        direction: direction(mk_p, slope, slope_p, alpha),
    }
}

pub fn narrative(cell: NarrativeCell) -> &'static str {
    use Direction::*;
    use EffectBand::*;
    match (cell.direction, cell.band) {
        (Negative, Trivial) => "The independent variable exerts only a trivial effect on the dependent variable, which is monotonic, negative, and statistically significant.",
        (Negative, Small) => "The independent variable exerts a small monotonic effect on the dependent variable, which is negative and statistically significant.",
        (Negative, Medium) => "The independent variable exerts a medium monotonic effect on the dependent variable, which is negative and statistically significant.",
        (Negative, Large) => "The independent variable exerts a large effect on the dependent variable, which is negative and statistically significant.",
        (Positive, Trivial) => "The independent variable exerts only a trivial effect on the dependent variable, which is monotonic, positive, and statistically significant.",
        (Positive, Small) => "The independent variable exerts a small monotonic effect on the dependent variable, which is positive and statistically significant.",
        (Positive, Medium) => "The independent variable exerts a medium effect on the dependent variable, which is positive and statistically significant.",
        (Positive, Large) => "The independent variable exerts a large effect on the dependent variable, which is positive and statistically significant.",
        (NotMonotone, Trivial) => "The independent variable exerts only a trivial effect on the dependent variable, which is not monotonic.",
        (NotMonotone, Small) => "The independent variable exerts a small effect on the dependent variable, which is not monotonic.",
        (NotMonotone, Medium) => "The independent variable exerts a medium effect on the dependent variable, which is not monotonic.",
        (NotMonotone, Large) => "The independent variable exerts a large effect on the dependent variable, which is not monotonic.",
        (Undetermined, Trivial) => "The independent variable exerts only a trivial effect on the dependent variable, which is monotonic, but its direction is not statistically significant.",
        (Undetermined, Small) => "The independent variable exerts a small monotonic effect on the dependent variable, but its direction is not statistically significant.",
        (Undetermined, Medium) => "The independent variable exerts a medium monotonic effect on the dependent variable, but its direction is not statistically significant.",
        (Undetermined, Large) => "The independent variable exerts a large effect on the dependent variable, which is monotonic, but its direction is not statistically significant.",
    }
}

/// Used in place of a grid cell when the model fits worse than the mean.
pub const NEGATIVE_R2_NARRATIVE: &str =
    "The model fits worse than a constant prediction, so no effect size or direction is reported.";

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn grid_is_complete_and_distinct() {
        let mut seen = HashSet::new();
        for d in Direction::GRID {
            for b in EffectBand::ALL {
                let text = narrative(NarrativeCell { band: b, direction: d });
                assert!(text.contains(b.label().to_lowercase().as_str()));
                assert!(seen.insert(text));
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn every_grid_cell_is_reachable() {
        let inputs = [(0.01, -1.0, 0.01), (0.01, 1.0, 0.01), (0.3, 1.0, 0.01)];
        for (d, (mk, s, sp)) in Direction::GRID.iter().zip(inputs) {
            for b in EffectBand::ALL {
                assert_eq!(select_cell(b, mk, s, sp, 0.05), NarrativeCell { band: b, direction: *d });
            }
        }
    }

    #[test]
    fn non_significant_trend_ignores_slope() {
        let cell = select_cell(EffectBand::Small, 0.3, -5.0, 1e-9, 0.05);
        assert_eq!(cell.direction, Direction::NotMonotone);
        assert_eq!(
            narrative(cell),
            "The independent variable exerts a small effect on the dependent variable, which is not monotonic."
        );
    }

    #[test]
    fn large_negative() {
        let text = narrative(select_cell(EffectBand::Large, 1e-6, -0.006, 1e-5, 0.05));
        assert!(text.contains("large effect") && text.contains("negative and statistically significant"));
    }

    #[test]
    fn boundary_p_counts_as_significant() {
        assert_eq!(direction(0.05, 1.0, 0.05, 0.05), Direction::Positive);
        assert_eq!(direction(0.05, 0.0, 0.01, 0.05), Direction::Undetermined);
        assert_eq!(direction(0.01, 1.0, 0.2, 0.05), Direction::Undetermined);
        assert_eq!(direction(f64::NAN, 1.0, 0.01, 0.05), Direction::NotMonotone);
    }
}
