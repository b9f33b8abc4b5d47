use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::mc::Histogram;
use crate::model::GaussianSummary;

const MASS_TOLERANCE: f64 = 1e-9;

/// Probability masses over shared bin edges.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscreteDensity {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl DiscreteDensity {
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || edges.len() != masses.len() + 1 {
            return Err(Error::InvalidDensity("need one more edge than masses"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDensity("edges must increase strictly"));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidDensity("negative mass"));
        }
        let total = math::sum(masses.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity("masses do not sum to one"));
        }
        Ok(Self { edges, masses })
    }

    /// Normalises nonnegative weights into a density.
    pub fn from_weights(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total = math::sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::InvalidDensity("weights carry no mass"));
        }
        Self::new(edges, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn from_histogram(h: &Histogram) -> Result<Self> {
        Self::from_weights(h.edges.clone(), h.masses())
    }

    /// A Gaussian discretised onto `edges` and renormalised to the covered range.
    pub fn from_gaussian(g: &GaussianSummary, edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidDensity("need at least two edges"));
        }
        let cdf: Vec<f64> = edges.iter().map(|&x| g.cdf(x)).collect();
        let weights: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        Self::from_weights(edges, weights)
    }

    /// Redistributes the mass onto `edges`, assuming it is uniform within
    /// each source bin. Mass outside the target range is dropped and the
    /// remainder renormalised.
    pub fn rebin(&self, edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidDensity("need at least two edges"));
        }
        let mut weights = alloc::vec![0.0; edges.len() - 1];
        for (w, &m) in self.edges.windows(2).zip(&self.masses) {
            let (a, b) = (w[0], w[1]);
            let mut k = edges.partition_point(|&e| e <= a).saturating_sub(1);
            while k + 1 < edges.len() && edges[k] < b {
                let lo = a.max(edges[k]);
                let hi = b.min(edges[k + 1]);
                if hi > lo {
                    weights[k] += m * (hi - lo) / (b - a);
                }
                k += 1;
            }
        }
        Self::from_weights(edges, weights)
    }

    fn check_edges(&self, other: &Self) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::EdgeMismatch);
        }
        Ok(())
    }
}

/// `sum p_i log2(p_i / q_i)` over bins with `p_i > 0`; infinite when `q`
/// misses mass that `p` has.
pub fn kl_divergence(p: &DiscreteDensity, q: &DiscreteDensity) -> Result<f64> {
    p.check_edges(q)?;
    let mut acc = KahanSum::new();
    for (&pi, &qi) in p.masses.iter().zip(&q.masses) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc.add(pi * libm::log2(pi / qi));
        }
    }
    Ok(acc.value().max(0.0))
}

/// Jensen-Shannon divergence in bits divided by `normalizer`.
///
/// With `normalizer = 1` the value lies in `[0, 1]`.
pub fn jsd(p: &DiscreteDensity, q: &DiscreteDensity, normalizer: f64) -> Result<f64> {
    p.check_edges(q)?;
    if !(normalizer > 0.0) || !normalizer.is_finite() {
        return Err(Error::InvalidConfig("normalizer must be positive"));
    }
    let mut acc = KahanSum::new();
    for (&pi, &qi) in p.masses.iter().zip(&q.masses) {
        let mi = 0.5 * (pi + qi);
        if pi > 0.0 {
            acc.add(0.5 * pi * libm::log2(pi / mi));
        }
        if qi > 0.0 {
            acc.add(0.5 * qi * libm::log2(qi / mi));
        }
    }
    Ok(acc.value().max(0.0) / normalizer)
}
