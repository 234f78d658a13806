//! Beta prime regression with separate mean and precision submodels.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] scalar special functions,
//! * [`distribution`] the beta prime distribution in shape and mean–precision form,
//! * [`regression`] model specification, likelihood derivatives and fitting,
//! * [`diagnostics`] residuals, simulated envelopes and local influence,
//! * [`simulation`] Monte Carlo studies of estimator and residual behaviour.

pub mod diagnostics;
pub mod distribution;
pub mod error;
pub mod regression;
pub mod simulation;
pub mod special;

pub use error::{Error, Result, Submodel};
pub use regression::{fit, FitOptions, FittedModel, Link, ModelSpec};
