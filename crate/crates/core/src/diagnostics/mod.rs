//! Residuals, simulated envelopes and local influence for fitted models.

mod envelope;
mod influence;
mod residuals;

pub use envelope::{
    quantile_type7, simulated_envelope, EnvelopeBands, EnvelopeOptions, MAX_FAILED_FRACTION,
    MIN_REPLICATES,
};
pub use influence::{
    local_influence, perturbation_matrix, InfluenceResult, InfluenceSubset, PerturbationScheme,
};
pub use residuals::{
    pearson_residuals, pearson_residuals_at, quantile_residuals, quantile_residuals_at,
    ResidualKind, ResidualSet, CLAMP,
};
