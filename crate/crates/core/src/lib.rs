//! Robust mixture ensembles for regression with latent groups.
//!
//! The crate has two estimation paths sharing one set of domain types:
//!
//! * a linear path: an EM-fitted mixture of linear regressions ([`em`])
//!   whose group-specific predictors are aggregated into a single robust
//!   predictor by a distributionally robust weighting ([`dro`]);
//! * a neural path: a mixture-of-experts trained directly on a
//!   worst-group-aware objective ([`moe`]).
//!
//! [`simgen`] reproduces the synthetic benchmark used to validate both
//! paths and [`eval`] computes overall and worst-group metrics over
//! intersectional subgroups, with paired significance tests.

pub mod dro;
pub mod em;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod moe;
pub mod simgen;
pub mod stats;

pub use error::{Result, RomeError};
pub use model::{
    Dataset, FeatureSpec, MixtureParams, Responsibilities, RobustWeights, Standardizer,
};
