use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::distribution::MeanPrecisionParams;
use crate::regression::FittedModel;
use crate::special::normal_quantile_unchecked;

/// F is clamped to [CLAMP, 1 − CLAMP] before applying Φ⁻¹.
pub const CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    Quantile,
    Pearson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet {
    pub kind: ResidualKind,
    pub values: DVector<f64>,
    /// Zero-based observation indices, in the order of `values`.
    pub observation_ids: Vec<usize>,
    /// Observations whose cdf value hit the clamp.
    pub clamped: Vec<usize>,
}

/// r^Q = Φ⁻¹(F(y | μ̂, φ̂)) at the fitted means and precisions.
pub fn quantile_residuals(m: &FittedModel) -> ResidualSet {
    quantile_residuals_at(m.spec().y(), &m.mu_hat, &m.phi_hat)
}

/// Quantile residuals for arbitrary (y, μ, φ). The upper tail is inverted
/// from 1 − F directly so that large residuals keep their precision.
pub fn quantile_residuals_at(
    y: &DVector<f64>,
    mu: &DVector<f64>,
    phi: &DVector<f64>,
) -> ResidualSet {
    let n = y.len();
    let mut values = DVector::zeros(n);
    let mut clamped = Vec::new();
    for i in 0..n {
        let shape = MeanPrecisionParams::new(mu[i], phi[i])
            .expect("fitted parameters are positive")
            .to_shape();
        let (lower, upper) = shape.cdf_pair(y[i]);
        values[i] = if lower <= 0.5 {
            if lower < CLAMP {
                clamped.push(i);
            }
            normal_quantile_unchecked(lower.max(CLAMP))
        } else {
            if upper < CLAMP {
                clamped.push(i);
            }
            -normal_quantile_unchecked(upper.max(CLAMP))
        };
    }
    ResidualSet {
        kind: ResidualKind::Quantile,
        values,
        observation_ids: (0..n).collect(),
        clamped,
    }
}

/// r^P = √φ̂ (y − μ̂) / √(μ̂(1+μ̂)).
pub fn pearson_residuals(m: &FittedModel) -> ResidualSet {
    pearson_residuals_at(m.spec().y(), &m.mu_hat, &m.phi_hat)
}

pub fn pearson_residuals_at(
    y: &DVector<f64>,
    mu: &DVector<f64>,
    phi: &DVector<f64>,
) -> ResidualSet {
    let n = y.len();
    let values = DVector::from_fn(n, |i, _| {
        phi[i].sqrt() * (y[i] - mu[i]) / (mu[i] * (1.0 + mu[i])).sqrt()
    });
    ResidualSet {
        kind: ResidualKind::Pearson,
        values,
        observation_ids: (0..n).collect(),
        clamped: Vec::new(),
    }
}
