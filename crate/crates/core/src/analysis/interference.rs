use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, std_normal_cdf};
use crate::model::GaussianSummary;
use crate::quad;

/// `P(A > B)` for independent Gaussians `A` and `B`.
///
/// With `A` the barrier and `B` a system's RMSE this is the chance that the
/// observed score is already dominated by rating noise. Two point masses
/// compare their means, with 0.5 on a tie.
pub fn interference_probability(a: &GaussianSummary, b: &GaussianSummary) -> f64 {
    let spread = a.variance + b.variance;
    if spread == 0.0 {
        return point_compare(a.mean, b.mean);
    }
    std_normal_cdf((a.mean - b.mean) / math::sqrt(spread))
}

fn point_compare(a: f64, b: f64) -> f64 {
    match a.partial_cmp(&b) {
        Some(core::cmp::Ordering::Greater) => 1.0,
        Some(core::cmp::Ordering::Less) => 0.0,
        _ => 0.5,
    }
}

/// `P(A > B)` as `integral f_B(x) (1 - F_A(x)) dx`, by adaptive quadrature.
///
/// Independent of the closed form; the two agree to about 1e-9.
pub fn interference_probability_quadrature(a: &GaussianSummary, b: &GaussianSummary) -> f64 {
    match (a.variance == 0.0, b.variance == 0.0) {
        (true, true) => return point_compare(a.mean, b.mean),
        // P(a > B) = F_B(a), taken just below a
        (true, false) => return b.cdf(a.mean),
        (false, true) => return 1.0 - a.cdf(b.mean),
        (false, false) => {}
    }
    let sb = b.std_dev();
    let sa = a.std_dev();
    let (lo, hi) = (b.mean - 12.0 * sb, b.mean + 12.0 * sb);
    let mut breaks: Vec<f64> = Vec::new();
    breaks.push(lo);
    for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
        for x in [b.mean + k * sb, a.mean + k * sa] {
            if x > lo && x < hi {
                breaks.push(x);
            }
        }
    }
    breaks.push(hi);
    breaks.sort_unstable_by(f64::total_cmp);
    breaks.dedup();
    let integrand = |x: f64| b.pdf(x) * (1.0 - a.cdf(x));
    quad::adaptive_over(&integrand, &breaks, 1e-11).clamp(0.0, 1.0)
}

/// Trial-wise estimate of `P(A > B)` from index-aligned samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalInterference {
    pub probability: f64,
    pub standard_error: f64,
    pub trials: usize,
}

/// Fraction of trials `k` with `a[k] > b[k]`; ties count one half.
pub fn interference_from_samples(a: &[f64], b: &[f64]) -> Result<EmpiricalInterference> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("no trials to compare"));
    }
    let score: f64 = a.iter().zip(b).map(|(x, y)| point_compare(*x, *y)).sum();
    let n = a.len() as f64;
    let p = score / n;
    Ok(EmpiricalInterference {
        probability: p,
        standard_error: math::sqrt(p * (1.0 - p) / n),
        trials: a.len(),
    })
}
