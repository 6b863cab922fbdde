//! Impartial estimation for tabular regression problems.
//!
//! Covariates are split into sensitive (S), legitimate (X), suspect (W) and
//! black-box (B) blocks. One least-squares fit of the response on all blocks
//! drives every estimator variant in [`estimators`]; [`decomposition`] splits
//! fitted values into disparate-treatment, disparate-impact and
//! statistical-discrimination components; [`metrics`] scores any prediction
//! vector; [`harness`] holds the data generators and the bias-injection
//! validation protocol.

pub mod dataset;
pub mod decomposition;
pub mod error;
pub mod estimators;
pub mod format;
pub mod harness;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};
