//! Closed-form Gaussian error propagation for metric distributions.
//!
//! All ratings are condensed into `Z = (1/N) * sum(Y_v)` with per-pair
//! squared residuals `Y_v`, whose mean and variance follow from the Gaussian
//! rating model. The RMSE is `sqrt(Z)`, expanded to first order around `E[Z]`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, std_normal_cdf, KahanSum};
use crate::model::{GaussianSummary, PredictorVector, RatingDistribution};

/// Central moments `m_0..=m_4` of a scalar random variable and the
/// derivatives `g(mu)`, `g'(mu)`, `g''(mu)` of a mapping at its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorMoments {
    /// `central[k]` is `m_k`; `None` when unknown.
    pub central: [Option<f64>; 5],
    pub derivatives: [f64; 3],
}

impl TaylorMoments {
    /// Moments of `N(mean, variance)` with the mapping's derivatives at `mean`.
    pub fn gaussian(variance: f64, derivatives: [f64; 3]) -> Self {
        Self {
            central: [
                Some(1.0),
                Some(0.0),
                Some(variance),
                Some(0.0),
                Some(3.0 * variance * variance),
            ],
            derivatives,
        }
    }

    /// `sqrt` expanded around `mean` for a Gaussian argument.
    pub fn sqrt_of_gaussian(mean: f64, variance: f64) -> Self {
        let root = math::sqrt(mean);
        Self::gaussian(
            variance,
            [root, 0.5 / root, -0.25 / (mean * root)],
        )
    }

    fn moment(&self, k: usize) -> Result<f64> {
        self.central
            .get(k)
            .copied()
            .flatten()
            .ok_or(Error::MissingMoment(k))
    }
}

const FACTORIAL: [f64; 3] = [1.0, 1.0, 2.0];

/// `sum_{k <= order} g^(k)(mu) / k! * m_k`.
pub fn taylor_expectation(tm: &TaylorMoments, order: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut acc = KahanSum::new();
    for k in 0..=order {
        acc.add(tm.derivatives[k] / FACTORIAL[k] * tm.moment(k)?);
    }
    Ok(acc.value())
}

/// `sum_{k <= order} (g^(k)(mu) / k!)^2 * (m_{2k} - m_k^2)`, order 1 or 2.
pub fn taylor_variance(tm: &TaylorMoments, order: usize) -> Result<f64> {
    if !(1..=2).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut acc = KahanSum::new();
    for k in 1..=order {
        let c = tm.derivatives[k] / FACTORIAL[k];
        let mk = tm.moment(k)?;
        acc.add(c * c * (tm.moment(2 * k)? - mk * mk));
    }
    Ok(acc.value())
}

fn check_variances(variances: &[f64]) -> Result<()> {
    if variances.is_empty() {
        return Err(Error::EmptyInput("no variances"));
    }
    match variances.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        Some(&v) => Err(Error::InvalidVariance(v)),
        None => Ok(()),
    }
}

/// Distribution of the optimal recommender's RMSE:
/// `N( sqrt(sum(s2) / N), sum(s2^2) / (2 N sum(s2)) )`.
pub fn magic_barrier_rmse(variances: &[f64]) -> Result<GaussianSummary> {
    check_variances(variances)?;
    let n = variances.len() as f64;
    let s2 = math::sum(variances.iter().copied());
    let s4 = math::sum(variances.iter().map(|v| v * v));
    if s2 <= 0.0 {
        return Err(Error::DegenerateBarrier);
    }
    Ok(GaussianSummary {
        mean: math::sqrt(s2 / n),
        variance: s4 / (2.0 * n * s2),
    })
}

/// Mean and variance of `Z`, the mean squared residual of the optimal system.
pub fn mean_square_moments(variances: &[f64]) -> Result<GaussianSummary> {
    check_variances(variances)?;
    let n = variances.len() as f64;
    Ok(GaussianSummary {
        mean: math::sum(variances.iter().copied()) / n,
        variance: 2.0 * math::sum(variances.iter().map(|v| v * v)) / (n * n),
    })
}

/// The barrier with the second-order Taylor terms of the square root kept:
/// `E - V[Z] / (8 E[Z]^1.5)` and `V + V[Z]^2 / (32 E[Z]^3)`. Diagnostic only.
pub fn magic_barrier_rmse_second_order(variances: &[f64]) -> Result<GaussianSummary> {
    let z = mean_square_moments(variances)?;
    if z.mean <= 0.0 {
        return Err(Error::DegenerateBarrier);
    }
    let tm = TaylorMoments::sqrt_of_gaussian(z.mean, z.variance);
    Ok(GaussianSummary {
        mean: taylor_expectation(&tm, 2)?,
        variance: taylor_variance(&tm, 2)?,
    })
}

/// Residual offsets `mean - prediction`, checked for alignment.
fn offsets(dists: &[RatingDistribution], predictors: &PredictorVector) -> Result<Vec<f64>> {
    predictors.check_aligned(dists)?;
    if dists.is_empty() {
        return Err(Error::EmptyInput("no rating distributions"));
    }
    check_variances(&dists.iter().map(|d| d.variance).collect::<Vec<_>>())?;
    Ok(dists
        .iter()
        .zip(predictors.values())
        .map(|(d, p)| d.mean - p)
        .collect())
}

/// RMSE distribution of an arbitrary system.
///
/// With offset `d = mean - prediction`, each squared residual is a scaled
/// noncentral chi-square with `E[Y] = s2 + d^2` and `V[Y] = 2 s2^2 + 4 d^2 s2`.
/// The square root is then expanded to first order as for the barrier.
pub fn rmse_distribution(
    dists: &[RatingDistribution],
    predictors: &PredictorVector,
) -> Result<GaussianSummary> {
    let d = offsets(dists, predictors)?;
    let n = dists.len() as f64;
    let mut ey = KahanSum::new();
    let mut vy = KahanSum::new();
    for (dist, &off) in dists.iter().zip(&d) {
        let s2 = dist.variance;
        let d2 = off * off;
        ey.add(s2 + d2);
        vy.add(2.0 * s2 * s2 + 4.0 * d2 * s2);
    }
    let mean_z = ey.value() / n;
    if mean_z <= 0.0 {
        return Err(Error::DegenerateBarrier);
    }
    let var_z = vy.value() / (n * n);
    Ok(GaussianSummary {
        mean: math::sqrt(mean_z),
        variance: var_z / (4.0 * mean_z),
    })
}

/// Mean and variance of `|N(offset, variance)|` (folded normal).
pub fn folded_normal_moments(offset: f64, variance: f64) -> (f64, f64) {
    if variance == 0.0 {
        return (libm::fabs(offset), 0.0);
    }
    let sd = math::sqrt(variance);
    let mean = sd * math::sqrt(2.0 / core::f64::consts::PI) * libm::exp(-offset * offset / (2.0 * variance))
        + offset * (1.0 - 2.0 * std_normal_cdf(-offset / sd));
    let var = (offset * offset + variance - mean * mean).max(0.0);
    (mean, var)
}

/// MAE distribution: the average of independent folded normals.
pub fn mae_distribution(
    dists: &[RatingDistribution],
    predictors: &PredictorVector,
) -> Result<GaussianSummary> {
    let d = offsets(dists, predictors)?;
    let n = dists.len() as f64;
    let mut mean = KahanSum::new();
    let mut var = KahanSum::new();
    for (dist, &off) in dists.iter().zip(&d) {
        let (m, v) = folded_normal_moments(off, dist.variance);
        mean.add(m);
        var.add(v);
    }
    Ok(GaussianSummary {
        mean: mean.value() / n,
        variance: var.value() / (n * n),
    })
}
