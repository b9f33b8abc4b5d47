use crate::math;
use crate::model::GaussianSummary;

/// Whether the 99% intervals (`mean +- 3 sd`) of the barrier and a system
/// overlap, i.e. whether a probabilistic look at the barrier is warranted.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriterionVerdict {
    /// `E[MB] + 3 sd[MB] > E[RMSE] - 3 sd[RMSE]`.
    pub differentiated_analysis_needed: bool,
    /// `(E[RMSE] - 3 sd[RMSE]) - (E[MB] + 3 sd[MB])`; negative when the
    /// intervals overlap.
    pub margin: f64,
    /// `E[RMSE] - E[MB] < 6 sd[MB]`, assuming both spreads are equal.
    pub simplified_needed: bool,
    /// `E[RMSE] - E[MB]`.
    pub gap: f64,
    /// `6 sd[MB]`.
    pub simplified_threshold: f64,
}

pub fn improvement_criterion(mb: &GaussianSummary, rmse: &GaussianSummary) -> CriterionVerdict {
    let mb_upper = mb.mean + 3.0 * math::sqrt(mb.variance);
    let rmse_lower = rmse.mean - 3.0 * math::sqrt(rmse.variance);
    let gap = rmse.mean - mb.mean;
    let threshold = 6.0 * math::sqrt(mb.variance);
    CriterionVerdict {
        differentiated_analysis_needed: mb_upper > rmse_lower,
        margin: rmse_lower - mb_upper,
        simplified_needed: gap < threshold,
        gap,
        simplified_threshold: threshold,
    }
}
