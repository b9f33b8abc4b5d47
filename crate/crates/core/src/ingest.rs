//! Re-rating data: tensor validation, per-pair Gaussian fits, the normality
//! check, and the population law of rating variances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::model::{RatingDistribution, ScaleSpec};
use crate::rng::StreamSeeder;

/// One observed rating: `user` rated `item` with `rating` in trial `trial`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    /// 1-based.
    pub trial: u32,
    pub rating: i32,
}

/// Validated re-rating records on a scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTensor {
    scale: ScaleSpec,
    records: Vec<RatingRecord>,
}

impl RatingTensor {
    pub fn builder(scale: ScaleSpec) -> TensorBuilder {
        TensorBuilder {
            scale,
            records: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    pub fn from_records(scale: ScaleSpec, records: impl IntoIterator<Item = RatingRecord>) -> Result<Self> {
        let mut builder = Self::builder(scale);
        for r in records {
            builder.push(r)?;
        }
        Ok(builder.finish())
    }

    pub fn scale(&self) -> &ScaleSpec {
        &self.scale
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Ratings grouped per (user, item) in order of first appearance, each
    /// slice sorted by trial.
    pub fn slices(&self) -> Vec<PairSlice<'_>> {
        let mut index: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        let mut slices: Vec<PairSlice<'_>> = Vec::new();
        for r in &self.records {
            let key = (r.user.as_str(), r.item.as_str());
            let at = *index.entry(key).or_insert_with(|| {
                slices.push(PairSlice {
                    user: key.0,
                    item: key.1,
                    ratings: Vec::new(),
                });
                slices.len() - 1
            });
            slices[at].ratings.push((r.trial, r.rating));
        }
        for s in &mut slices {
            s.ratings.sort_unstable_by_key(|&(t, _)| t);
        }
        slices
    }
}

/// The trial-dimension slice of one user-item pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSlice<'a> {
    pub user: &'a str,
    pub item: &'a str,
    /// `(trial, rating)` sorted by trial.
    pub ratings: Vec<(u32, i32)>,
}

impl PairSlice<'_> {
    pub fn values(&self) -> Vec<f64> {
        self.ratings.iter().map(|&(_, r)| f64::from(r)).collect()
    }
}

/// Incremental tensor construction, so callers can attach positions to errors.
#[derive(Debug)]
pub struct TensorBuilder {
    scale: ScaleSpec,
    records: Vec<RatingRecord>,
    seen: BTreeSet<(String, String, u32)>,
}

impl TensorBuilder {
    pub fn push(&mut self, record: RatingRecord) -> Result<()> {
        if !self.scale.contains(i64::from(record.rating)) {
            return Err(Error::RatingOutOfScale {
                value: i64::from(record.rating),
                min: self.scale.min_category,
                max: self.scale.max_category,
            });
        }
        if record.trial == 0 || record.trial > self.scale.num_trials {
            return Err(Error::TrialOutOfRange {
                trial: record.trial,
                max: self.scale.num_trials,
            });
        }
        let key = (record.user.clone(), record.item.clone(), record.trial);
        if !self.seen.insert(key) {
            return Err(Error::DuplicateRecord {
                user: record.user,
                item: record.item,
                trial: record.trial,
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn finish(self) -> RatingTensor {
        RatingTensor {
            scale: self.scale,
            records: self.records,
        }
    }
}

/// Maximum-likelihood Gaussian per (user, item) slice: sample mean and
/// population variance. Constant slices get variance 0.
pub fn fit_pair_gaussians(tensor: &RatingTensor) -> Result<Vec<RatingDistribution>> {
    if tensor.is_empty() {
        return Err(Error::EmptyInput("rating tensor has no records"));
    }
    Ok(tensor
        .slices()
        .into_iter()
        .map(|s| {
            let (mean, variance) = population_moments(&s.values());
            RatingDistribution {
                user: s.user.into(),
                item: s.item.into(),
                mean,
                variance,
            }
        })
        .collect())
}

fn population_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = math::sum(xs.iter().copied()) / n;
    let variance = math::sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, variance)
}

/// Keeps pairs with strictly positive variance, in order.
pub fn filter_nonvanishing(dists: &[RatingDistribution]) -> Vec<RatingDistribution> {
    dists.iter().filter(|d| d.variance > 0.0).cloned().collect()
}

/// Outcome of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

/// One-sample KS test of `sample` against `N(mu, sigma^2)`.
///
/// The p-value uses the asymptotic Kolmogorov distribution evaluated at
/// `(sqrt(n) + 0.12 + 0.11 / sqrt(n)) * D`. With five trials per pair the test
/// has little power; that is the setting it is used in.
pub fn ks_normality_test(sample: &[f64], mu: f64, sigma: f64, alpha: f64) -> Result<KsResult> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateReference(sigma));
    }
    if sample.len() < 2 {
        return Err(Error::EmptyInput("KS test needs at least two observations"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig("alpha must lie in (0, 1)"));
    }
    let mut xs = sample.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = math::std_normal_cdf((x - mu) / sigma);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0f64, f64::max);
    let sqrt_n = math::sqrt(n);
    let p_value = kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic);
    Ok(KsResult {
        statistic,
        p_value,
        rejected: p_value < alpha,
    })
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    use core::f64::consts::PI;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda.
        let y = libm::exp(-PI * PI / (8.0 * lambda * lambda));
        let y8 = libm::pow(y, 8.0);
        let y24 = libm::pow(y, 24.0);
        let y48 = libm::pow(y, 48.0);
        let cdf = libm::sqrt(2.0 * PI) / lambda * y * (1.0 + y8 + y24 + y48 + libm::pow(y, 80.0));
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let x = libm::exp(-2.0 * lambda * lambda);
        let mut acc = 0.0;
        let mut sign = 1.0;
        for k in 1..=20 {
            let k = k as f64;
            acc += sign * libm::pow(x, k * k);
            sign = -sign;
        }
        (2.0 * acc).clamp(0.0, 1.0)
    }
}

/// Maximum-likelihood fit of an exponential law to positive values.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentialFit {
    pub rate: f64,
    pub sample_size: usize,
}

impl ExponentialFit {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidConfig("exponential rate must be positive"));
        }
        Ok(Self {
            rate,
            sample_size: 0,
        })
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }
}

/// `rate = 1 / mean(variances)`.
pub fn fit_exponential(variances: &[f64]) -> Result<ExponentialFit> {
    if variances.is_empty() {
        return Err(Error::EmptyInput("no variances to fit"));
    }
    let mut acc = KahanSum::new();
    for &v in variances {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::ExponentialSupport(v));
        }
        acc.add(v);
    }
    Ok(ExponentialFit {
        rate: variances.len() as f64 / acc.value(),
        sample_size: variances.len(),
    })
}

const SAMPLE_CHUNK: usize = 1 << 14;

/// `n` reproducible draws from `Exp(fit.rate)`, optionally truncated to
/// `bounds = (low, high)`.
///
/// Draws are generated in fixed chunks; chunk `c` uses stream `c` of the
/// seeded generator, so the output depends only on `(seed, n, rate, bounds)`.
/// Truncated draws use the inverse CDF of the truncated law.
pub fn sample_variances(
    fit: &ExponentialFit,
    n: usize,
    bounds: Option<(f64, f64)>,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput("sample size must be at least 1"));
    }
    let rate = ExponentialFit::new(fit.rate)?.rate;
    let draw = Draw::new(rate, bounds)?;
    let seeder = StreamSeeder::new(seed);
    let mut out = alloc::vec![0.0; n];
    fill_chunks(&mut out, |chunk_index, chunk| {
        let mut rng = seeder.stream(chunk_index as u64);
        for slot in chunk {
            *slot = draw.sample(&mut rng);
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Draw {
    Plain { rate: f64 },
    Truncated { rate: f64, low: f64, span_mass: f64 },
}

impl Draw {
    fn new(rate: f64, bounds: Option<(f64, f64)>) -> Result<Self> {
        let Some((low, high)) = bounds else {
            return Ok(Draw::Plain { rate });
        };
        if !(low >= 0.0) || !(high > low) || !high.is_finite() {
            return Err(Error::InvalidBounds("need 0 <= low < high < infinity"));
        }
        // P(low <= X <= high | X >= low)
        let span_mass = -libm::expm1(-rate * (high - low));
        if !(span_mass > 0.0) || libm::exp(-rate * low) == 0.0 {
            return Err(Error::InvalidBounds("truncated mass is zero"));
        }
        Ok(Draw::Truncated {
            rate,
            low,
            span_mass,
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Draw::Plain { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            Draw::Truncated {
                rate,
                low,
                span_mass,
            } => {
                let u: f64 = rng.random();
                low - libm::log1p(-u * span_mass) / rate
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn fill_chunks<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    use rayon::prelude::*;
    out.par_chunks_mut(SAMPLE_CHUNK)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
fn fill_chunks<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]),
{
    for (i, c) in out.chunks_mut(SAMPLE_CHUNK).enumerate() {
        f(i, c);
    }
}
