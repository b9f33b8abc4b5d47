//! Probability distributions of recommender-evaluation metrics when user
//! ratings are random variables.
//!
//! Every rating of a user-item pair is modelled as a Gaussian `N(mean, variance)`
//! fitted from repeated ratings. A metric such as the RMSE then becomes a random
//! variable itself. This crate computes its distribution in two ways:
//!
//! * [`mc`]: Monte-Carlo convolution with counter-based seeding, bit-identical
//!   regardless of thread count.
//! * [`approx`]: closed-form Gaussian error propagation, including the
//!   distribution of the optimal recommender's metric (the "magic barrier").
//!
//! [`analysis`] works on the resulting distributions (divergences, interference
//! probabilities, the improvement criterion, sensitivity sweeps and ranking
//! stability). [`ingest`] fits the per-pair Gaussians from a re-rating tensor.
//!
//! The crate is `no_std` + `alloc`. Enable `std` for `std::error::Error`, and
//! `parallel` to spread Monte-Carlo trials over a rayon pool.
#![cfg_attr(not(feature = "std"), no_std)]
// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod approx;
mod error;
pub mod ingest;
pub mod math;
pub mod mc;
pub mod model;
pub mod quad;
pub mod rng;

pub use crate::error::{Error, Result};
pub use crate::model::{
    gaussian_cdf, variance_bounds, GaussianSummary, MetricKind, PredictorVector,
    RatingDistribution, ScaleSpec, VarianceBounds,
};
