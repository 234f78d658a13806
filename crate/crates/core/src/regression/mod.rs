//! The beta prime regression model with mean and precision submodels.

mod fit;
mod link;
mod lrtest;
mod model;

pub use fit::{
    fit, starting_values, FitOptions, FittedModel, Interval, IterationRecord, StepMethod,
    VcovSource,
};
pub use link::Link;
pub use lrtest::{lr_test_precision, HatAssignment, LrTest};
pub use model::{
    fisher_information, hessian, join_theta, log_likelihood, score, split_theta, ModelSpec,
    ScoreWorkspace,
};
