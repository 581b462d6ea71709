//! Hypothesis testing for black-box regression models.
//!
//! For every input variable of a fitted model this crate reports a
//! permutation-based, baseline-adjusted Cohen's f² effect size, and judges the
//! variable's direction of influence by running a serially-corrected
//! Mann-Kendall test and a bootstrapped Theil-Sen slope over its accumulated
//! local effect profile.

pub mod ale;
pub mod data;
pub mod effect_size;
pub mod error;
pub mod flag;
pub mod predictor;
pub mod regressor;
pub mod report;
pub mod rng;
pub mod trend;

pub use error::{Error, Result};
