use alloc::vec;
use alloc::vec::Vec;

use crate::approx::magic_barrier_rmse;
use crate::error::{Error, Result};
use crate::model::{variance_bounds, GaussianSummary, ScaleSpec};

/// The quantity varied by a sensitivity sweep; the other one is held fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Vary the number of rating pairs at a common variance.
    PairCount { counts: Vec<usize>, variance: f64 },
    /// Vary the common variance at a fixed number of pairs.
    Variance { variances: Vec<f64>, count: usize },
}

/// Barrier moments at one grid point, plus the envelope spanned by the
/// smallest nonzero and the largest variance attainable on the scale.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityRow {
    pub axis_value: f64,
    pub pairs: usize,
    pub variance_per_pair: f64,
    pub mean: f64,
    pub variance: f64,
    pub mean_low: f64,
    pub mean_high: f64,
    pub variance_low: f64,
    pub variance_high: f64,
}

fn homogeneous(count: usize, variance: f64) -> Result<GaussianSummary> {
    magic_barrier_rmse(&vec![variance; count])
}

pub fn sensitivity_sweep(axis: &SweepAxis, scale: &ScaleSpec) -> Result<Vec<SensitivityRow>> {
    let bounds = variance_bounds(scale)?;
    let points: Vec<(f64, usize, f64)> = match axis {
        SweepAxis::PairCount { counts, variance } => {
            if counts.is_empty() {
                return Err(Error::EmptyInput("empty pair-count grid"));
            }
            if counts.contains(&0) {
                return Err(Error::InvalidConfig("pair counts must be positive"));
            }
            counts.iter().map(|&n| (n as f64, n, *variance)).collect()
        }
        SweepAxis::Variance { variances, count } => {
            if variances.is_empty() {
                return Err(Error::EmptyInput("empty variance grid"));
            }
            if *count == 0 {
                return Err(Error::InvalidConfig("pair count must be positive"));
            }
            variances.iter().map(|&v| (v, *count, v)).collect()
        }
    };
    points
        .into_iter()
        .map(|(axis_value, n, v)| {
            let at = homogeneous(n, v)?;
            let low = homogeneous(n, bounds.min_nonzero)?;
            let high = homogeneous(n, bounds.max)?;
            Ok(SensitivityRow {
                axis_value,
                pairs: n,
                variance_per_pair: v,
                mean: at.mean,
                variance: at.variance,
                mean_low: low.mean,
                mean_high: high.mean,
                variance_low: low.variance,
                variance_high: high.variance,
            })
        })
        .collect()
}
