//! Working with metric distributions: divergences, interference, the
//! improvement criterion, sensitivity sweeps and ranking stability.

mod criterion;
mod curves;
mod density;
mod interference;
mod rank;
mod sensitivity;

pub use criterion::{improvement_criterion, CriterionVerdict};
pub use curves::{ranking_error_curves, ranking_error_curves_mc, CurvePoint, NoiseSweepConfig};
pub use density::{jsd, kl_divergence, DiscreteDensity};
pub use interference::{
    interference_from_samples, interference_probability, interference_probability_quadrature,
    EmpiricalInterference,
};
pub use rank::{rank_distribution, RankDistribution};
pub use sensitivity::{sensitivity_sweep, SensitivityRow, SweepAxis};
