use alloc::format;
use alloc::vec::Vec;

use crate::approx::rmse_distribution;
use crate::error::{Error, Result};
use crate::mc::{simulate_metric, MCConfig};
use crate::model::{MetricKind, PredictorVector, RatingDistribution};

use super::interference::{interference_from_samples, interference_probability};

/// Two noisy copies of the optimal recommender, `offset` and `offset + delta`
/// noise levels away from it.
///
/// A noise level `l` shifts every prediction by `l * noise_scale` rating
/// units, with the sign alternating across pairs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSweepConfig {
    pub relative_differences: Vec<f64>,
    pub offsets: Vec<f64>,
    pub base_variances: Vec<f64>,
    pub noise_scale: f64,
    /// Seeds the Monte-Carlo variant of the sweep.
    pub seed: u64,
}

impl NoiseSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.relative_differences.is_empty() || self.offsets.is_empty() {
            return Err(Error::EmptyInput("empty delta or offset grid"));
        }
        if self.relative_differences.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidConfig("relative differences must be nonnegative"));
        }
        if self.offsets.windows(2).any(|w| !(w[1] >= w[0])) || self.offsets.iter().any(|o| !(*o >= 0.0)) {
            return Err(Error::InvalidConfig("offsets must be nonnegative and nondecreasing"));
        }
        if !(self.noise_scale > 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::InvalidConfig("noise scale must be positive"));
        }
        if self.base_variances.is_empty() {
            return Err(Error::EmptyInput("no base variances"));
        }
        if let Some(&v) = self.base_variances.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidVariance(v));
        }
        if !self.base_variances.iter().any(|v| *v > 0.0) {
            return Err(Error::DegenerateBarrier);
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<RatingDistribution> {
        self.base_variances
            .iter()
            .enumerate()
            .map(|(i, &v)| RatingDistribution {
                user: format!("p{i}"),
                item: format!("p{i}"),
                mean: 0.0,
                variance: v,
            })
            .collect()
    }

    fn system(&self, pairs: &[RatingDistribution], level: f64) -> Result<PredictorVector> {
        let shift = level * self.noise_scale;
        let offsets: Vec<f64> = (0..pairs.len())
            .map(|i| if i % 2 == 0 { shift } else { -shift })
            .collect();
        PredictorVector::with_offsets(pairs, &offsets)
    }
}

/// Probability that the point paradigm ranks the noisier system first.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub delta: f64,
    pub offset: f64,
    pub error_probability: f64,
}

/// For every `(delta, offset)`: `P(RMSE_2 < RMSE_1)` from the closed-form
/// RMSE distributions of both systems.
pub fn ranking_error_curves(cfg: &NoiseSweepConfig) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let pairs = cfg.pairs();
    let mut out = Vec::with_capacity(cfg.relative_differences.len() * cfg.offsets.len());
    for &delta in &cfg.relative_differences {
        for &offset in &cfg.offsets {
            let first = rmse_distribution(&pairs, &cfg.system(&pairs, offset)?)?;
            let second = rmse_distribution(&pairs, &cfg.system(&pairs, offset + delta)?)?;
            out.push(CurvePoint {
                delta,
                offset,
                error_probability: interference_probability(&first, &second),
            });
        }
    }
    Ok(out)
}

/// Monte-Carlo counterpart of [`ranking_error_curves`]: both systems are
/// simulated on independent rating draws and compared trial by trial.
pub fn ranking_error_curves_mc(cfg: &NoiseSweepConfig, trials: usize) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let pairs = cfg.pairs();
    let mut out = Vec::new();
    let mut stream = 0u64;
    for &delta in &cfg.relative_differences {
        for &offset in &cfg.offsets {
            let seed_first = cfg.seed.wrapping_add(2 * stream);
            let seed_second = seed_first.wrapping_add(1);
            stream += 1;
            let first = simulate_metric(
                &pairs,
                &cfg.system(&pairs, offset)?,
                MetricKind::Rmse,
                &MCConfig::new(trials, seed_first),
            )?;
            let second = simulate_metric(
                &pairs,
                &cfg.system(&pairs, offset + delta)?,
                MetricKind::Rmse,
                &MCConfig::new(trials, seed_second),
            )?;
            let est = interference_from_samples(&first.values, &second.values)?;
            out.push(CurvePoint {
                delta,
                offset,
                error_probability: est.probability,
            });
        }
    }
    Ok(out)
}
