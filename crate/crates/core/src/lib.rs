//! Online model selection between a multi-armed bandit model and a linear
//! contextual bandit model.
//!
//! The crate provides:
//!
//! - [`envelopes`]: the threshold functions behind the confidence radius and
//!   the switching test,
//! - [`estimation`]: per-arm upper confidence estimates, a bias-corrected
//!   ridge regression and the optimistic maximizer over a ball,
//! - [`policy`]: UCB, an OFUL-style joint linear baseline and OSOM,
//! - [`env`]: simulated simple/complex environments and the regret oracle,
//! - [`harness`] and [`output`]: seeded Monte Carlo experiments and their
//!   CSV serialization.

pub mod cli;
pub mod env;
pub mod envelopes;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod output;
pub mod policy;
pub mod types;

pub use error::{Error, Result};
pub use harness::{run_experiment, run_single, AggregateCurve, Coupling, ExperimentResult, ExperimentSpec};
pub use policy::{Policy, PolicyKind};
pub use types::{
    AlgoConfig, ContextDistSpec, ContextKind, ContextSlate, InstanceSpec, ModelKind, RadiusMode, RoundLog,
};
