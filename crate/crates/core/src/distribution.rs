//! The beta prime distribution in its shape form BP(α, β) and in the
//! mean–precision form BP(μ, φ) with α = μ(1+φ) and β = φ + 2.
//!
//! The density is `y^(α-1) (1+y)^-(α+β) / B(α, β)` on `y > 0` and the cdf is
//! `I_{y/(1+y)}(α, β)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{self, SpecialFnConfig};

/// Shape parameters (α, β) of BP(α, β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    alpha: f64,
    beta: f64,
}

/// Mean and precision (μ, φ): E[Y] = μ and Var[Y] = μ(1+μ)/φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPrecisionParams {
    mu: f64,
    phi: f64,
}

/// Moments and shape features of a BP(μ, φ) distribution. Fields outside
/// their domain of existence are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub variance: f64,
    /// Exists for φ > 1.
    pub skewness: Option<f64>,
    /// Exists for φ > 2. This is the full kurtosis (3 for a normal).
    pub kurtosis: Option<f64>,
    /// Interior mode, for α > 1.
    pub mode: Option<f64>,
    /// Both inflection points of the density, for α > 2.
    pub inflection_points: Option<(f64, f64)>,
}

impl ShapeParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(domain(
                "ShapeParams::new",
                format!("alpha and beta must be finite and > 0, got ({alpha}, {beta})"),
            ));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Inverse of [`MeanPrecisionParams::to_shape`]: μ = α/(β−1), φ = β−2.
    /// Requires β > 2 so that the variance exists.
    pub fn to_mean_precision(&self) -> Result<MeanPrecisionParams> {
        if self.beta <= 2.0 {
            return Err(domain(
                "ShapeParams::to_mean_precision",
                format!("beta must exceed 2, got {}", self.beta),
            ));
        }
        MeanPrecisionParams::new(self.alpha / (self.beta - 1.0), self.beta - 2.0)
    }

    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        if !(y.is_finite() && y > 0.0) {
            return Err(domain(
                "log_pdf",
                format!("y must be finite and > 0, got {y}"),
            ));
        }
        Ok(self.log_pdf_unchecked(y))
    }

    pub(crate) fn log_pdf_unchecked(&self, y: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        (a - 1.0) * y.ln() - (a + b) * y.ln_1p() - special::ln_beta_unchecked(a, b)
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.log_pdf(y).map(f64::exp)
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        check_support_closed("cdf", y)?;
        Ok(self.cdf_pair(y).0)
    }

    /// Upper tail probability P(Y > y).
    pub fn sf(&self, y: f64) -> Result<f64> {
        check_support_closed("sf", y)?;
        Ok(self.cdf_pair(y).1)
    }

    // (F(y), 1 - F(y)) with x = y/(1+y) and 1 - x = 1/(1+y) formed directly.
    pub(crate) fn cdf_pair(&self, y: f64) -> (f64, f64) {
        if y <= 0.0 {
            return (0.0, 1.0);
        }
        let x = y / (1.0 + y);
        let xc = 1.0 / (1.0 + y);
        special::inc_beta_split(x, xc, self.alpha, self.beta, &SpecialFnConfig::default())
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u.is_finite() && u > 0.0 && u < 1.0) {
            return Err(domain("quantile", format!("u must lie in (0, 1), got {u}")));
        }
        let t = special::reg_inc_beta_inv(u, self.alpha, self.beta)?;
        Ok(t / (1.0 - t))
    }

    /// `n` draws as V/W with V ~ Ga(α, 1) and W ~ Ga(β, 1) independent.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let numerator = Gamma::new(self.alpha, 1.0).expect("validated shape");
        let denominator = Gamma::new(self.beta, 1.0).expect("validated shape");
        (0..n)
            .map(|_| draw_ratio(&numerator, &denominator, rng))
            .collect()
    }
}

fn draw_ratio<R: Rng + ?Sized>(
    numerator: &Gamma<f64>,
    denominator: &Gamma<f64>,
    rng: &mut R,
) -> f64 {
    loop {
        let y = numerator.sample(rng) / denominator.sample(rng);
        // Underflow of V or W can leave the support; redraw.
        if y > 0.0 && y.is_finite() {
            return y;
        }
    }
}

fn check_support_closed(function: &'static str, y: f64) -> Result<()> {
    if y.is_nan() || y < 0.0 {
        return Err(domain(function, format!("y must be >= 0, got {y}")));
    }
    Ok(())
}

impl MeanPrecisionParams {
    pub fn new(mu: f64, phi: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0 && phi.is_finite() && phi > 0.0) {
            return Err(domain(
                "MeanPrecisionParams::new",
                format!("mu and phi must be finite and > 0, got ({mu}, {phi})"),
            ));
        }
        Ok(Self { mu, phi })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// α = μ(1+φ), β = φ + 2.
    pub fn to_shape(&self) -> ShapeParams {
        ShapeParams {
            alpha: self.mu * (1.0 + self.phi),
            beta: self.phi + 2.0,
        }
    }

    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        self.to_shape().log_pdf(y)
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.to_shape().pdf(y)
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        self.to_shape().cdf(y)
    }

    pub fn sf(&self, y: f64) -> Result<f64> {
        self.to_shape().sf(y)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.to_shape().quantile(u)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.to_shape().sample(n, seed)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        self.to_shape().sample_with(rng, n)
    }

    pub fn variance(&self) -> f64 {
        self.mu * (1.0 + self.mu) / self.phi
    }

    pub fn summary(&self) -> DistributionSummary {
        let (mu, phi) = (self.mu, self.phi);
        let ShapeParams { alpha, beta } = self.to_shape();
        let v = mu * (1.0 + mu);

        let skewness = (phi > 1.0).then(|| {
            2.0 * (1.0 + phi) * (1.0 + 2.0 * mu) / (phi - 1.0)
                * (phi / (v * (1.0 + phi) * (1.0 + phi))).sqrt()
        });
        let kurtosis = (phi > 2.0).then(|| {
            let denom = (phi - 2.0) * (phi - 1.0);
            6.0 * ((5.0 * phi - 1.0) / denom + phi / (v * denom)) + 3.0
        });
        let mode = (alpha > 1.0).then(|| (alpha - 1.0) / (beta + 1.0));
        // Roots of f''(y) = 0: (β+1)(β+2)y² − 2(α−1)(β+2)y + (α−1)(α−2) = 0.
        let inflection_points = (alpha > 2.0).then(|| {
            let centre = (alpha - 1.0) * (beta + 2.0);
            let spread = ((alpha - 1.0) * (beta + 2.0) * (alpha + beta)).sqrt();
            let denom = (beta + 2.0) * (beta + 1.0);
            ((centre - spread) / denom, (centre + spread) / denom)
        });

        DistributionSummary {
            mean: mu,
            variance: v / phi,
            skewness,
            kurtosis,
            mode,
            inflection_points,
        }
    }
}
