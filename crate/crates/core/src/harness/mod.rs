//! Experiment drivers: seeded Monte Carlo welfare ratios and per-bucket
//! diagnostics of the optimum.

mod buckets;
mod montecarlo;

pub use buckets::{bucket_diagnostics, BucketDiag, BucketEdge};
pub use montecarlo::{monte_carlo, monte_carlo_with, Family, InstanceSource, MonteCarloRun, RatioStats, TrialRow, TrialView};
