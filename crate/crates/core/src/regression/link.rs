use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Link function g relating a positive parameter to its linear predictor,
/// `g(μ) = η`.
///
/// The identity and square-root links do not map every real predictor into
/// `(0, ∞)`; [`Link::inverse`] returns `None` for predictors outside the
/// valid branch (η ≤ 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    #[default]
    Log,
    Identity,
    Sqrt,
}

impl Link {
    /// g(μ).
    pub fn link(self, mu: f64) -> f64 {
        match self {
            Link::Log => mu.ln(),
            Link::Identity => mu,
            Link::Sqrt => mu.sqrt(),
        }
    }

    /// g⁻¹(η), or `None` when the result would not be a finite positive value.
    pub fn inverse(self, eta: f64) -> Option<f64> {
        let mu = match self {
            Link::Log => eta.exp(),
            Link::Identity if eta > 0.0 => eta,
            Link::Sqrt if eta > 0.0 => eta * eta,
            _ => return None,
        };
        (mu.is_finite() && mu > 0.0).then_some(mu)
    }

    /// dμ/dη expressed in terms of μ.
    pub fn dmu_deta(self, mu: f64) -> f64 {
        match self {
            Link::Log => mu,
            Link::Identity => 1.0,
            Link::Sqrt => 2.0 * mu.sqrt(),
        }
    }

    /// d²μ/dη² expressed in terms of μ.
    pub fn d2mu_deta2(self, mu: f64) -> f64 {
        match self {
            Link::Log => mu,
            Link::Identity => 0.0,
            Link::Sqrt => 2.0,
        }
    }

    /// ∂(dμ/dη)/∂μ, the factor a′ in the Hessian weights.
    pub fn dmu_deta_dmu(self, mu: f64) -> f64 {
        match self {
            Link::Log => 1.0,
            Link::Identity => 0.0,
            Link::Sqrt => 1.0 / mu.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Log => "log",
            Link::Identity => "identity",
            Link::Sqrt => "sqrt",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(Link::Log),
            "identity" => Ok(Link::Identity),
            "sqrt" => Ok(Link::Sqrt),
            other => Err(format!(
                "unknown link '{other}' (expected log, identity or sqrt)"
            )),
        }
    }
}
