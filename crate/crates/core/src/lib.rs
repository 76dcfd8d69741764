//! Truthful mechanisms for online bipartite matching with offline buyers.
//!
//! Buyers are known up front and unit-demand; items arrive one by one and
//! must be assigned or discarded on arrival. The crate simulates the
//! mechanism catalog, computes offline optima, audits incentive properties,
//! generates the standard hard instance families, checks the dual
//! certificates behind the lower-bound argument, and runs Monte Carlo
//! welfare-ratio experiments.
//!
//! Everything numeric is generic over [`Scalar`]; `f64`, `f32` and exact
//! rationals are supported.

pub mod audit;
pub mod coins;
pub mod error;
pub mod generators;
pub mod harness;
pub mod lpcheck;
pub mod market;
pub mod mechanisms;
pub mod optimum;
pub mod outcome;
pub mod scalar;
pub mod welfare;

pub use coins::{perturbation, Coins, Role};
pub use error::{Error, Result};
pub use market::{Bid, Buyer, Instance, Report, ReportProfile, ValidationReport, Violation};
pub use mechanisms::{MechanismKind, OnlineMechanism};
pub use optimum::{brute_force_optimum, max_weight_matching, OptResult};
pub use outcome::{Assignment, Decision, Outcome, RoundRecord};
pub use scalar::Scalar;
pub use welfare::{social_welfare, utility};

/// Exact arithmetic for certificates and tie-sensitive tests.
pub type Rational = num_rational::Ratio<i128>;

pub type Market = Instance<f64>;
pub type ExactMarket = Instance<Rational>;
pub type Profile = ReportProfile<f64>;
pub type ExactProfile = ReportProfile<Rational>;
pub type MarketOutcome = Outcome<f64>;
pub type ExactOutcome = Outcome<Rational>;
