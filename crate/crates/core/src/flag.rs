use serde::{Deserialize, Serialize};

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The model fits worse than the target mean; effect bands are withheld.
    NegativeR2,
    /// A permuted effect size came out below zero.
    NegativeEffect,
    /// Too few permutation rounds, or round-to-round spread above 5% of the mean loss.
    WideMonteCarlo,
    /// At least one ALE bin held no observations.
    EmptyBins,
    /// The ALE grid was coarsened because the variable has few distinct values.
    GridReduced,
    /// The Mann-Kendall test found no significant monotonic trend.
    NotMonotone,
    /// The requested explanation sample exceeded the table and was clamped.
    SampleClamped,
}
