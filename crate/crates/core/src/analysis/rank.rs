use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mc::{simulate_shared, MCConfig};
use crate::model::{MetricKind, PredictorVector, RatingDistribution};

/// Observed orderings of systems across Monte-Carlo trials.
///
/// An ordering lists system indices from best (lowest metric) to worst; ties
/// keep input order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankDistribution {
    pub trials: u64,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

impl RankDistribution {
    pub fn probability(&self, ordering: &[usize]) -> f64 {
        self.counts.get(ordering).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    /// `(ordering, probability)` by decreasing probability, then ordering.
    pub fn probabilities(&self) -> Vec<(Vec<usize>, f64)> {
        let mut v: Vec<(Vec<usize>, f64)> = self
            .counts
            .iter()
            .map(|(o, &c)| (o.clone(), c as f64 / self.trials as f64))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

/// Ranks all systems on common rating draws in every trial and tallies the
/// orderings.
pub fn rank_distribution(
    systems: &[PredictorVector],
    dists: &[RatingDistribution],
    metric: MetricKind,
    cfg: &MCConfig,
) -> Result<RankDistribution> {
    if systems.is_empty() {
        return Err(Error::EmptyInput("no systems to rank"));
    }
    let values = simulate_shared(dists, systems, metric, cfg)?;
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::with_capacity(systems.len());
    for k in 0..cfg.trials {
        order.clear();
        order.extend(0..systems.len());
        order.sort_by(|&a, &b| values[a][k].total_cmp(&values[b][k]));
        *counts.entry(order.clone()).or_insert(0) += 1;
    }
    Ok(RankDistribution {
        trials: cfg.trials as u64,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::optimal_predictors;
    use alloc::format;
    use alloc::vec;

    fn pairs(n: usize, variance: f64) -> Vec<RatingDistribution> {
        (0..n)
            .map(|i| RatingDistribution::new(format!("u{i}"), "i", 3.0, variance).unwrap())
            .collect()
    }

    fn shifted(d: &[RatingDistribution], shift: f64) -> PredictorVector {
        let offs: Vec<f64> = (0..d.len()).map(|i| if i % 2 == 0 { shift } else { -shift }).collect();
        PredictorVector::with_offsets(d, &offs).unwrap()
    }

    #[test]
    fn single_system() {
        let d = pairs(10, 0.5);
        let sys = optimal_predictors(&d, MetricKind::Rmse).unwrap();
        let r = rank_distribution(&[sys], &d, MetricKind::Rmse, &MCConfig::new(100, 0)).unwrap();
        assert_eq!(r.counts.len(), 1);
        assert_eq!(r.probability(&[0]), 1.0);
        assert!(rank_distribution(&[], &d, MetricKind::Rmse, &MCConfig::new(100, 0)).is_err());
    }

    #[test]
    fn tallies_sum_to_trials_and_reproduce() {
        let d = pairs(30, 0.8);
        let systems = vec![
            optimal_predictors(&d, MetricKind::Rmse).unwrap(),
            shifted(&d, 0.1),
            shifted(&d, 0.2),
        ];
        let cfg = MCConfig::new(5000, 77);
        let a = rank_distribution(&systems, &d, MetricKind::Rmse, &cfg).unwrap();
        assert_eq!(a.counts.values().sum::<u64>(), 5000);
        let total: f64 = a.probabilities().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(a, rank_distribution(&systems, &d, MetricKind::Rmse, &cfg).unwrap());
    }
}
