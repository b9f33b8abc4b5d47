//! Monte-Carlo convolution of per-rating Gaussians through a metric.
//!
//! Trial `k` draws one realisation `x_k` of every rating from the ChaCha
//! stream `k` of the master seed and records `z_k = metric(x_k, predictions)`.
//! The sample is bit-identical for a given configuration whatever the number
//! of worker threads.

use alloc::vec::Vec;

use rand_distr::StandardNormal;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::model::{GaussianSummary, MetricKind, Prediction, PredictorVector, RatingDistribution};
use crate::rng::StreamSeeder;

/// Upper limit of the default bin count.
pub const MAX_DEFAULT_BINS: usize = 512;

/// `ceil(sqrt(trials))`, clamped to `[2, MAX_DEFAULT_BINS]`.
pub fn default_bins(trials: usize) -> usize {
    let r = libm::ceil(libm::sqrt(trials as f64)) as usize;
    r.clamp(2, MAX_DEFAULT_BINS)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MCConfig {
    pub trials: usize,
    pub bins: usize,
    pub master_seed: u64,
    /// Clamp every drawn rating to `[low, high]` before comparing. Off by
    /// default: the Gaussian model lives on the whole real line.
    pub clip: Option<(f64, f64)>,
}

impl MCConfig {
    pub fn new(trials: usize, master_seed: u64) -> Self {
        Self {
            trials,
            bins: default_bins(trials),
            master_seed,
            clip: None,
        }
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = bins;
        self
    }

    pub fn with_clip(mut self, low: f64, high: f64) -> Self {
        self.clip = Some((low, high));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1"));
        }
        if self.bins < 2 {
            return Err(Error::InvalidConfig("bins must be at least 2"));
        }
        if let Some((lo, hi)) = self.clip {
            if !(lo < hi) {
                return Err(Error::InvalidBounds("clip range must satisfy low < high"));
            }
        }
        Ok(())
    }
}

/// Equal-width histogram normalised to a density.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub heights: Vec<f64>,
}

impl Histogram {
    /// Bins spanning `[min, max]` of the values. A constant sample gets a unit
    /// interval centred on the value.
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("histogram of an empty sample"));
        }
        if bins < 1 {
            return Err(Error::InvalidConfig("bins must be at least 1"));
        }
        let (mut lo, mut hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidDensity("sample contains non-finite values"));
        }
        if hi == lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = alloc::vec![0u64; bins];
        for &v in values {
            let i = ((v - lo) / width) as usize;
            counts[i.min(bins - 1)] += 1;
        }
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
        edges.push(hi);
        let n = values.len() as f64;
        let heights = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| c as f64 / (n * (w[1] - w[0])))
            .collect();
        Ok(Self { edges, heights })
    }

    pub fn bins(&self) -> usize {
        self.heights.len()
    }

    /// Probability mass per bin.
    pub fn masses(&self) -> Vec<f64> {
        self.heights
            .iter()
            .zip(self.edges.windows(2))
            .map(|(h, w)| h * (w[1] - w[0]))
            .collect()
    }
}

/// Monte-Carlo realisations of a metric plus their summary and histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub values: Vec<f64>,
    /// Sample mean and unbiased sample variance.
    pub summary: GaussianSummary,
    pub histogram: Histogram,
}

impl MetricSample {
    pub fn from_values(values: Vec<f64>, bins: usize) -> Result<Self> {
        let summary = sample_summary(&values)?;
        let histogram = Histogram::from_values(&values, bins)?;
        Ok(Self {
            values,
            summary,
            histogram,
        })
    }

    pub fn trials(&self) -> usize {
        self.values.len()
    }

    /// Standard error of the sample mean.
    pub fn standard_error(&self) -> f64 {
        math::sqrt(self.summary.variance / self.values.len() as f64)
    }
}

/// Mean and unbiased variance (zero for a single value).
pub fn sample_summary(values: &[f64]) -> Result<GaussianSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("empty sample"));
    }
    let n = values.len() as f64;
    let mean = math::sum(values.iter().copied()) / n;
    let variance = if values.len() > 1 {
        math::sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)
    } else {
        0.0
    };
    Ok(GaussianSummary { mean, variance })
}

/// The optimal recommender for `metric`: every prediction is the rating mean.
pub fn optimal_predictors(dists: &[RatingDistribution], metric: MetricKind) -> Result<PredictorVector> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("no rating distributions"));
    }
    Ok(PredictorVector::new(
        dists
            .iter()
            .map(|d| Prediction {
                user: d.user.clone(),
                item: d.item.clone(),
                value: metric.optimal_prediction(d),
            })
            .collect(),
    ))
}

/// One metric realisation from one draw per pair.
pub fn evaluate_metric_once(
    dists: &[RatingDistribution],
    predictors: &PredictorVector,
    metric: MetricKind,
    draws: &[f64],
) -> Result<f64> {
    if predictors.len() != dists.len() {
        return Err(Error::LengthMismatch {
            expected: dists.len(),
            found: predictors.len(),
        });
    }
    if draws.len() != dists.len() {
        return Err(Error::LengthMismatch {
            expected: dists.len(),
            found: draws.len(),
        });
    }
    if draws.is_empty() {
        return Err(Error::EmptyInput("no rating draws"));
    }
    let total: KahanSum = draws
        .iter()
        .zip(predictors.values())
        .map(|(x, p)| metric.cost(x - p))
        .collect();
    Ok(metric.finish(total.value() / draws.len() as f64))
}

/// Per-pair constants of one system.
#[derive(Debug, Clone)]
struct PairTerms {
    mean: f64,
    sd: f64,
    prediction: f64,
    offset: f64,
}

fn pair_terms(dists: &[RatingDistribution], predictors: &PredictorVector) -> Result<Vec<PairTerms>> {
    predictors.check_aligned(dists)?;
    dists
        .iter()
        .zip(predictors.values())
        .map(|(d, p)| {
            if !(d.variance >= 0.0) || !d.variance.is_finite() {
                return Err(Error::InvalidVariance(d.variance));
            }
            Ok(PairTerms {
                mean: d.mean,
                sd: d.std_dev(),
                prediction: p,
                offset: d.mean - p,
            })
        })
        .collect()
}

/// Draws every pair's standardised normal for trial `k`.
struct TrialDraws<'a> {
    seeder: &'a StreamSeeder,
    n: usize,
}

impl TrialDraws<'_> {
    fn fill(&self, k: usize, buf: &mut Vec<f64>) {
        let mut rng = self.seeder.stream(k as u64);
        buf.clear();
        buf.extend((0..self.n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    }
}

#[inline]
fn system_value(terms: &[PairTerms], z: &[f64], metric: MetricKind, clip: Option<(f64, f64)>) -> f64 {
    let mut acc = 0.0;
    match clip {
        None => {
            for (t, &z) in terms.iter().zip(z) {
                acc += metric.cost(t.offset + t.sd * z);
            }
        }
        Some((lo, hi)) => {
            for (t, &z) in terms.iter().zip(z) {
                let x = (t.mean + t.sd * z).clamp(lo, hi);
                acc += metric.cost(x - t.prediction);
            }
        }
    }
    metric.finish(acc / terms.len() as f64)
}

/// Samples the metric distribution of one recommender.
pub fn simulate_metric(
    dists: &[RatingDistribution],
    predictors: &PredictorVector,
    metric: MetricKind,
    cfg: &MCConfig,
) -> Result<MetricSample> {
    let mut per_system = simulate_shared(dists, core::slice::from_ref(predictors), metric, cfg)?;
    let values = per_system.pop().expect("one system in, one sample out");
    MetricSample::from_values(values, cfg.bins)
}

/// The distribution of the optimal recommender's metric.
pub fn simulate_magic_barrier(
    dists: &[RatingDistribution],
    metric: MetricKind,
    cfg: &MCConfig,
) -> Result<MetricSample> {
    let predictors = optimal_predictors(dists, metric)?;
    simulate_metric(dists, &predictors, metric, cfg)
}

/// Metric values of several systems evaluated on common rating draws.
///
/// Returns one vector of `cfg.trials` values per system; entry `k` of every
/// system comes from the same realisation of all ratings.
pub fn simulate_shared(
    dists: &[RatingDistribution],
    systems: &[PredictorVector],
    metric: MetricKind,
    cfg: &MCConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if dists.is_empty() {
        return Err(Error::EmptyInput("no rating distributions"));
    }
    if systems.is_empty() {
        return Err(Error::EmptyInput("no systems"));
    }
    let terms: Vec<Vec<PairTerms>> = systems
        .iter()
        .map(|p| pair_terms(dists, p))
        .collect::<Result<_>>()?;
    let seeder = StreamSeeder::new(cfg.master_seed);
    let draws = TrialDraws {
        seeder: &seeder,
        n: dists.len(),
    };
    let s = systems.len();
    let mut flat = alloc::vec![0.0; cfg.trials * s];
    run_trials(&mut flat, s, |k, out, buf| {
        draws.fill(k, buf);
        for (slot, t) in out.iter_mut().zip(&terms) {
            *slot = system_value(t, buf, metric, cfg.clip);
        }
    });
    // trial-major -> system-major
    Ok((0..s)
        .map(|j| flat.iter().skip(j).step_by(s).copied().collect())
        .collect())
}

#[cfg(feature = "parallel")]
fn run_trials<F>(flat: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64], &mut Vec<f64>) + Sync,
{
    use rayon::prelude::*;
    flat.par_chunks_mut(width)
        .enumerate()
        .for_each_init(Vec::new, |buf, (k, out)| f(k, out, buf));
}

#[cfg(not(feature = "parallel"))]
fn run_trials<F>(flat: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64], &mut Vec<f64>),
{
    let mut buf = Vec::new();
    for (k, out) in flat.chunks_mut(width).enumerate() {
        f(k, out, &mut buf);
    }
}
