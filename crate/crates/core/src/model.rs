//! Domain types shared across the crate.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A bounded, discrete rating scale together with the number of repeated
/// ratings collected per user-item pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleSpec {
    pub min_category: i32,
    pub max_category: i32,
    pub num_trials: u32,
}

impl ScaleSpec {
    pub fn new(min_category: i32, max_category: i32, num_trials: u32) -> Result<Self> {
        if min_category >= max_category {
            return Err(Error::InvalidScale("min_category must be below max_category"));
        }
        if num_trials == 0 {
            return Err(Error::InvalidScale("num_trials must be at least 1"));
        }
        Ok(Self {
            min_category,
            max_category,
            num_trials,
        })
    }

    /// Five stars, five repeated ratings.
    pub fn five_star() -> Self {
        Self {
            min_category: 1,
            max_category: 5,
            num_trials: 5,
        }
    }

    pub fn contains(&self, rating: i64) -> bool {
        rating >= i64::from(self.min_category) && rating <= i64::from(self.max_category)
    }

    pub fn categories(&self) -> u32 {
        (self.max_category - self.min_category) as u32 + 1
    }
}

/// The latent rating of one user-item pair, `N(mean, variance)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatingDistribution {
    pub user: String,
    pub item: String,
    pub mean: f64,
    pub variance: f64,
}

impl RatingDistribution {
    pub fn new(
        user: impl Into<String>,
        item: impl Into<String>,
        mean: f64,
        variance: f64,
    ) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidVariance(variance));
        }
        Ok(Self {
            user: user.into(),
            item: item.into(),
            mean,
            variance,
        })
    }

    pub fn std_dev(&self) -> f64 {
        math::sqrt(self.variance)
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.user, &self.item)
    }
}

/// One prediction of a recommender for a user-item pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub user: String,
    pub item: String,
    pub value: f64,
}

/// A recommender system, as one real-valued prediction per user-item pair.
///
/// Entries are aligned index-for-index with the `RatingDistribution` list the
/// system is evaluated against.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictorVector {
    pub entries: Vec<Prediction>,
}

impl PredictorVector {
    pub fn new(entries: Vec<Prediction>) -> Self {
        Self { entries }
    }

    /// Predictions `dists[i].mean + offsets[i]`, keyed like `dists`.
    pub fn with_offsets(dists: &[RatingDistribution], offsets: &[f64]) -> Result<Self> {
        if dists.len() != offsets.len() {
            return Err(Error::LengthMismatch {
                expected: dists.len(),
                found: offsets.len(),
            });
        }
        Ok(Self {
            entries: dists
                .iter()
                .zip(offsets)
                .map(|(d, off)| Prediction {
                    user: d.user.clone(),
                    item: d.item.clone(),
                    value: d.mean + off,
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|p| p.value)
    }

    /// Checks length and key order against `dists`.
    pub fn check_aligned(&self, dists: &[RatingDistribution]) -> Result<()> {
        if self.entries.len() != dists.len() {
            return Err(Error::LengthMismatch {
                expected: dists.len(),
                found: self.entries.len(),
            });
        }
        for (index, (d, p)) in dists.iter().zip(&self.entries).enumerate() {
            if d.user != p.user || d.item != p.item {
                return Err(Error::KeyMismatch {
                    index,
                    dist_user: d.user.clone(),
                    dist_item: d.item.clone(),
                    pred_user: p.user.clone(),
                    pred_item: p.item.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Mean and variance of a metric-level distribution, read as a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianSummary {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianSummary {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidVariance(variance));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        math::sqrt(self.variance)
    }

    /// CDF; a zero-variance summary is the right-continuous step at `mean`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.variance == 0.0 {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        math::std_normal_cdf((x - self.mean) / self.std_dev())
    }

    /// Density. Zero everywhere for a degenerate summary.
    pub fn pdf(&self, x: f64) -> f64 {
        if self.variance == 0.0 {
            return 0.0;
        }
        let sd = self.std_dev();
        math::std_normal_pdf((x - self.mean) / sd) / sd
    }
}

/// `P(X <= x)` for `X ~ g`.
pub fn gaussian_cdf(g: &GaussianSummary, x: f64) -> f64 {
    g.cdf(x)
}

/// Accuracy metric comparing a rating with a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MetricKind {
    Rmse,
    Mae,
}

impl MetricKind {
    /// Per-pair comparison `c(x)` applied to the residual `x - prediction`.
    #[inline]
    pub fn cost(self, residual: f64) -> f64 {
        match self {
            MetricKind::Rmse => residual * residual,
            MetricKind::Mae => libm::fabs(residual),
        }
    }

    /// Maps the mean per-pair cost to the metric value.
    #[inline]
    pub fn finish(self, mean_cost: f64) -> f64 {
        match self {
            MetricKind::Rmse => math::sqrt(mean_cost),
            MetricKind::Mae => mean_cost,
        }
    }

    /// The prediction minimising the expected cost for `N(mean, variance)`.
    ///
    /// RMSE wants the expectation, MAE the median; both are the mean of a
    /// symmetric density.
    pub fn optimal_prediction(self, dist: &RatingDistribution) -> f64 {
        match self {
            MetricKind::Rmse | MetricKind::Mae => dist.mean,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Rmse => "rmse",
            MetricKind::Mae => "mae",
        }
    }
}

impl core::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(MetricKind::Rmse),
            "mae" => Ok(MetricKind::Mae),
            _ => Err(Error::InvalidConfig("metric must be rmse or mae")),
        }
    }
}

/// Smallest nonzero and largest population variance reachable on a scale.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceBounds {
    pub min_nonzero: f64,
    pub max: f64,
}

/// Enumerates every multiset of `num_trials` ratings on the scale and returns
/// the smallest nonzero and the largest population variance.
///
/// Variances are compared exactly as the integer numerators
/// `t * sum(x^2) - sum(x)^2` over the common denominator `t^2`.
pub fn variance_bounds(scale: &ScaleSpec) -> Result<VarianceBounds> {
    let scale = ScaleSpec::new(scale.min_category, scale.max_category, scale.num_trials)?;
    let t = scale.num_trials as usize;
    if t < 2 {
        return Err(Error::NoNonzeroVariance);
    }

    let mut min_num = i128::MAX;
    let mut max_num = 0i128;
    let mut current = alloc::vec![scale.min_category; t];
    // Walk nondecreasing sequences; each is one multiset.
    loop {
        let (s1, s2) = current.iter().fold((0i128, 0i128), |(a, b), &x| {
            let x = i128::from(x);
            (a + x, b + x * x)
        });
        let num = t as i128 * s2 - s1 * s1;
        if num > 0 && num < min_num {
            min_num = num;
        }
        max_num = max_num.max(num);

        let Some(pos) = current.iter().rposition(|&x| x < scale.max_category) else {
            break;
        };
        let next = current[pos] + 1;
        for slot in &mut current[pos..] {
            *slot = next;
        }
    }

    let denom = (t * t) as f64;
    Ok(VarianceBounds {
        min_nonzero: min_num as f64 / denom,
        max: max_num as f64 / denom,
    })
}
