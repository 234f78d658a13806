//! Model specification, log-likelihood and its analytic derivatives.
//!
//! With α = μ(1+φ) and κ = α + φ + 2, observation i contributes
//!
//! ```text
//! ℓᵢ = (αᵢ − 1) ln yᵢ − κᵢ ln(1+yᵢ) − ln Γ(αᵢ) − ln Γ(φᵢ+2) + ln Γ(κᵢ)
//! ```
//!
//! and the score and Hessian follow by the chain rule through the links
//! μᵢ = g₁⁻¹(xᵢᵀβ), φᵢ = g₂⁻¹(zᵢᵀν).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Submodel};
use crate::special::{digamma_unchecked, log_gamma_unchecked, trigamma_unchecked};

use super::link::Link;

/// Response, design matrices and links of a beta prime regression.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    y: DVector<f64>,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    mean_link: Link,
    precision_link: Link,
}

impl ModelSpec {
    /// Validates dimensions, positivity of the response and full column rank
    /// of both designs. `p + q < n` is only required for fitting, so that
    /// the likelihood can be evaluated on a single observation.
    pub fn new(
        y: DVector<f64>,
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        mean_link: Link,
        precision_link: Link,
    ) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || z.nrows() != n {
            return Err(Error::Dimension(format!(
                "response has {n} rows but X has {} and Z has {}",
                x.nrows(),
                z.nrows()
            )));
        }
        if x.ncols() == 0 || z.ncols() == 0 {
            return Err(Error::Dimension("X and Z need at least one column".into()));
        }
        if let Some((index, &value)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveResponse { index, value });
        }
        for (name, m) in [("X", &x), ("Z", &z)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dimension(format!(
                    "{name} contains non-finite entries"
                )));
            }
        }
        check_rank("mean (X)", &x)?;
        check_rank("precision (Z)", &z)?;
        Ok(Self {
            y,
            x,
            z,
            mean_link,
            precision_link,
        })
    }

    /// Same design and links with a new response vector.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "new response has {} rows, expected {}",
                y.len(),
                self.n()
            )));
        }
        if let Some((index, &value)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveResponse { index, value });
        }
        Ok(Self { y, ..self.clone() })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn mean_link(&self) -> Link {
        self.mean_link
    }

    pub fn precision_link(&self) -> Link {
        self.precision_link
    }

    /// Means and precisions implied by (β, ν); errors carry the first
    /// observation whose predictor leaves the link's valid range.
    pub fn parameters(
        &self,
        beta: &DVector<f64>,
        nu: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_coefficients(beta, nu)?;
        let eta_mean = &self.x * beta;
        let eta_prec = &self.z * nu;
        let mu = invert(self.mean_link, &eta_mean, Submodel::Mean)?;
        let phi = invert(self.precision_link, &eta_prec, Submodel::Precision)?;
        Ok((mu, phi))
    }

    fn check_coefficients(&self, beta: &DVector<f64>, nu: &DVector<f64>) -> Result<()> {
        if beta.len() != self.p() || nu.len() != self.q() {
            return Err(Error::Dimension(format!(
                "expected {} mean and {} precision coefficients, got {} and {}",
                self.p(),
                self.q(),
                beta.len(),
                nu.len()
            )));
        }
        Ok(())
    }
}

fn invert(link: Link, eta: &DVector<f64>, submodel: Submodel) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(eta.len());
    for (i, &e) in eta.iter().enumerate() {
        out[i] = link.inverse(e).ok_or(Error::InvalidPredictor {
            index: i,
            submodel,
            value: e,
        })?;
    }
    Ok(out)
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = max * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * 10.0;
    sv.iter().filter(|&&s| s > tol).count()
}

fn check_rank(matrix: &'static str, m: &DMatrix<f64>) -> Result<()> {
    let rank = numerical_rank(m);
    if rank < m.ncols() {
        return Err(Error::RankDeficient {
            matrix,
            rank,
            columns: m.ncols(),
        });
    }
    Ok(())
}

/// Per-observation quantities shared by the score, Hessian, Fisher
/// information and perturbation matrices, evaluated at one (β, ν).
///
/// Notation: αᵢ = μᵢ(1+φᵢ), κᵢ = αᵢ + φᵢ + 2.
#[derive(Debug, Clone)]
pub struct ScoreWorkspace {
    pub mu: DVector<f64>,
    pub phi: DVector<f64>,
    /// aᵢ = dμᵢ/dη₁ᵢ (diagonal of D₁).
    pub a: DVector<f64>,
    /// bᵢ = dφᵢ/dη₂ᵢ (diagonal of D₂).
    pub b: DVector<f64>,
    /// a′ᵢ = ∂aᵢ/∂μᵢ.
    pub a_prime: DVector<f64>,
    /// b′ᵢ = ∂bᵢ/∂φᵢ.
    pub b_prime: DVector<f64>,
    /// y*ᵢ = ln(yᵢ/(1+yᵢ)).
    pub y_star_mean: DVector<f64>,
    /// y⋆ᵢ = μᵢ ln yᵢ − (1+μᵢ) ln(1+yᵢ).
    pub y_star_precision: DVector<f64>,
    /// μ*ᵢ = Ψ(αᵢ) − Ψ(κᵢ).
    pub mu_star_mean: DVector<f64>,
    /// μ⋆ᵢ = μᵢ μ*ᵢ − γᵢ.
    pub mu_star_precision: DVector<f64>,
    /// γᵢ = Ψ(κᵢ) − Ψ(φᵢ+2).
    pub gamma: DVector<f64>,
    /// ∂ℓᵢ/∂μᵢ = (1+φᵢ)(y*ᵢ − μ*ᵢ) (diagonal of D₆).
    pub d_mu: DVector<f64>,
    /// ∂ℓᵢ/∂φᵢ = y⋆ᵢ − μ⋆ᵢ (diagonal of D₇).
    pub d_phi: DVector<f64>,
    pub dd_mu: DVector<f64>,
    pub dd_phi: DVector<f64>,
    pub dd_mu_phi: DVector<f64>,
    /// Hessian weights cᵢ, wᵢ, mᵢ (diagonals of D₃, D₄, D₅).
    pub c: DVector<f64>,
    pub w: DVector<f64>,
    pub m: DVector<f64>,
    /// Expected-information weights (diagonals of E₃, E₄, E₅).
    pub e3: DVector<f64>,
    pub e4: DVector<f64>,
    pub e5: DVector<f64>,
}

impl ScoreWorkspace {
    pub fn new(spec: &ModelSpec, beta: &DVector<f64>, nu: &DVector<f64>) -> Result<Self> {
        let (mu, phi) = spec.parameters(beta, nu)?;
        let n = spec.n();
        let ml = spec.mean_link();
        let pl = spec.precision_link();
        let mut ws = Self {
            a: mu.map(|m| ml.dmu_deta(m)),
            b: phi.map(|f| pl.dmu_deta(f)),
            a_prime: mu.map(|m| ml.dmu_deta_dmu(m)),
            b_prime: phi.map(|f| pl.dmu_deta_dmu(f)),
            mu,
            phi,
            y_star_mean: DVector::zeros(n),
            y_star_precision: DVector::zeros(n),
            mu_star_mean: DVector::zeros(n),
            mu_star_precision: DVector::zeros(n),
            gamma: DVector::zeros(n),
            d_mu: DVector::zeros(n),
            d_phi: DVector::zeros(n),
            dd_mu: DVector::zeros(n),
            dd_phi: DVector::zeros(n),
            dd_mu_phi: DVector::zeros(n),
            c: DVector::zeros(n),
            w: DVector::zeros(n),
            m: DVector::zeros(n),
            e3: DVector::zeros(n),
            e4: DVector::zeros(n),
            e5: DVector::zeros(n),
        };
        for i in 0..n {
            let (mu, phi, y) = (ws.mu[i], ws.phi[i], spec.y[i]);
            let alpha = mu * (1.0 + phi);
            let kappa = alpha + phi + 2.0;
            let (psi_a, psi_k, psi_p) = (
                digamma_unchecked(alpha),
                digamma_unchecked(kappa),
                digamma_unchecked(phi + 2.0),
            );
            let (tri_a, tri_k, tri_p) = (
                trigamma_unchecked(alpha),
                trigamma_unchecked(kappa),
                trigamma_unchecked(phi + 2.0),
            );
            let ln_y = y.ln();
            let ln_1y = y.ln_1p();

            let y_star = ln_y - ln_1y;
            let mu_star = psi_a - psi_k;
            let gamma = psi_k - psi_p;
            let y_star_p = mu * ln_y - (1.0 + mu) * ln_1y;
            let mu_star_p = mu * mu_star - gamma;

            let d_mu = (1.0 + phi) * (y_star - mu_star);
            let d_phi = y_star_p - mu_star_p;
            let dd_mu = -(1.0 + phi).powi(2) * (tri_a - tri_k);
            let dd_phi = -mu * mu * tri_a + (1.0 + mu).powi(2) * tri_k - tri_p;
            let dd_mu_phi =
                y_star + psi_k - psi_a + (1.0 + phi) * tri_k + mu * (1.0 + phi) * (tri_k - tri_a);

            let (a, b) = (ws.a[i], ws.b[i]);
            ws.y_star_mean[i] = y_star;
            ws.y_star_precision[i] = y_star_p;
            ws.mu_star_mean[i] = mu_star;
            ws.mu_star_precision[i] = mu_star_p;
            ws.gamma[i] = gamma;
            ws.d_mu[i] = d_mu;
            ws.d_phi[i] = d_phi;
            ws.dd_mu[i] = dd_mu;
            ws.dd_phi[i] = dd_phi;
            ws.dd_mu_phi[i] = dd_mu_phi;
            ws.c[i] = dd_mu * a * a + d_mu * ws.a_prime[i] * a;
            ws.w[i] = dd_phi * b * b + d_phi * ws.b_prime[i] * b;
            ws.m[i] = dd_mu_phi * a * b;
            ws.e3[i] = (1.0 + phi).powi(2) * (tri_a - tri_k) * a * a;
            ws.e4[i] = (mu * mu * tri_a - (1.0 + mu).powi(2) * tri_k + tri_p) * b * b;
            ws.e5[i] = -(1.0 + phi) * (tri_k + mu * (tri_k - tri_a)) * a * b;
        }
        Ok(ws)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// U = (Xᵀ Φ D₁ (y* − μ*), Zᵀ D₂ (y⋆ − μ⋆)).
    pub fn score(&self, spec: &ModelSpec) -> DVector<f64> {
        assemble_score(
            spec.x(),
            spec.z(),
            &self.phi,
            &self.a,
            &self.b,
            &(&self.y_star_mean - &self.mu_star_mean),
            &(&self.y_star_precision - &self.mu_star_precision),
        )
    }

    /// H = [[Xᵀ D₃ X, Xᵀ D₅ Z], [Zᵀ D₅ X, Zᵀ D₄ Z]].
    pub fn hessian(&self, spec: &ModelSpec) -> DMatrix<f64> {
        block_matrix(spec.x(), spec.z(), &self.c, &self.m, &self.w)
    }

    /// I = [[Xᵀ E₃ X, Xᵀ E₅ Z], [Zᵀ E₅ X, Zᵀ E₄ Z]].
    pub fn fisher(&self, spec: &ModelSpec) -> DMatrix<f64> {
        block_matrix(spec.x(), spec.z(), &self.e3, &self.e5, &self.e4)
    }

    /// Column i holds observation i's score contribution
    /// (xᵢ aᵢ ∂ℓᵢ/∂μᵢ ; zᵢ bᵢ ∂ℓᵢ/∂φᵢ).
    pub fn observation_scores(&self, spec: &ModelSpec) -> DMatrix<f64> {
        let (p, q, n) = (spec.p(), spec.q(), spec.n());
        let mut out = DMatrix::zeros(p + q, n);
        for i in 0..n {
            let gm = self.a[i] * self.d_mu[i];
            let gp = self.b[i] * self.d_phi[i];
            for j in 0..p {
                out[(j, i)] = spec.x[(i, j)] * gm;
            }
            for k in 0..q {
                out[(p + k, i)] = spec.z[(i, k)] * gp;
            }
        }
        out
    }
}

/// Matrix form of the score from its residual vectors.
pub(crate) fn assemble_score(
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
    phi: &DVector<f64>,
    a: &DVector<f64>,
    b: &DVector<f64>,
    mean_residual: &DVector<f64>,
    precision_residual: &DVector<f64>,
) -> DVector<f64> {
    let mean_weights = DVector::from_fn(phi.len(), |i, _| (1.0 + phi[i]) * a[i] * mean_residual[i]);
    let prec_weights = b.component_mul(precision_residual);
    let u_beta = x.tr_mul(&mean_weights);
    let u_nu = z.tr_mul(&prec_weights);
    let mut u = DVector::zeros(x.ncols() + z.ncols());
    u.rows_mut(0, x.ncols()).copy_from(&u_beta);
    u.rows_mut(x.ncols(), z.ncols()).copy_from(&u_nu);
    u
}

/// Aᵀ diag(w) B.
fn weighted_cross(a: &DMatrix<f64>, w: &DVector<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wb = b.clone();
    for (i, mut row) in wb.row_iter_mut().enumerate() {
        row *= w[i];
    }
    a.tr_mul(&wb)
}

fn block_matrix(
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
    w_mean: &DVector<f64>,
    w_cross: &DVector<f64>,
    w_prec: &DVector<f64>,
) -> DMatrix<f64> {
    let (p, q) = (x.ncols(), z.ncols());
    let mut out = DMatrix::zeros(p + q, p + q);
    let xx = weighted_cross(x, w_mean, x);
    let xz = weighted_cross(x, w_cross, z);
    let zz = weighted_cross(z, w_prec, z);
    out.view_mut((0, 0), (p, p)).copy_from(&xx);
    out.view_mut((0, p), (p, q)).copy_from(&xz);
    out.view_mut((p, 0), (q, p)).copy_from(&xz.transpose());
    out.view_mut((p, p), (q, q)).copy_from(&zz);
    // Exact symmetry of the diagonal blocks.
    for j in 0..p + q {
        for k in 0..j {
            let avg = 0.5 * (out[(j, k)] + out[(k, j)]);
            out[(j, k)] = avg;
            out[(k, j)] = avg;
        }
    }
    out
}

/// ℓ(β, ν) = Σᵢ ℓᵢ.
pub fn log_likelihood(spec: &ModelSpec, beta: &DVector<f64>, nu: &DVector<f64>) -> Result<f64> {
    let (mu, phi) = spec.parameters(beta, nu)?;
    Ok(log_likelihood_at(spec.y(), &mu, &phi))
}

fn log_likelihood_at(y: &DVector<f64>, mu: &DVector<f64>, phi: &DVector<f64>) -> f64 {
    y.iter()
        .zip(mu.iter().zip(phi.iter()))
        .map(|(&y, (&mu, &phi))| observation_log_likelihood(y, mu, phi))
        .sum()
}

pub(crate) fn observation_log_likelihood(y: f64, mu: f64, phi: f64) -> f64 {
    let alpha = mu * (1.0 + phi);
    let kappa = alpha + phi + 2.0;
    (alpha - 1.0) * y.ln()
        - kappa * y.ln_1p()
        - log_gamma_unchecked(alpha)
        - log_gamma_unchecked(phi + 2.0)
        + log_gamma_unchecked(kappa)
}

pub fn score(spec: &ModelSpec, beta: &DVector<f64>, nu: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(ScoreWorkspace::new(spec, beta, nu)?.score(spec))
}

pub fn hessian(spec: &ModelSpec, beta: &DVector<f64>, nu: &DVector<f64>) -> Result<DMatrix<f64>> {
    Ok(ScoreWorkspace::new(spec, beta, nu)?.hessian(spec))
}

pub fn fisher_information(
    spec: &ModelSpec,
    beta: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    Ok(ScoreWorkspace::new(spec, beta, nu)?.fisher(spec))
}

/// Splits θ = (βᵀ, νᵀ)ᵀ.
pub fn split_theta(theta: &DVector<f64>, p: usize) -> (DVector<f64>, DVector<f64>) {
    let beta = theta.rows(0, p).into_owned();
    let nu = theta.rows(p, theta.len() - p).into_owned();
    (beta, nu)
}

pub fn join_theta(beta: &DVector<f64>, nu: &DVector<f64>) -> DVector<f64> {
    let mut theta = DVector::zeros(beta.len() + nu.len());
    theta.rows_mut(0, beta.len()).copy_from(beta);
    theta.rows_mut(beta.len(), nu.len()).copy_from(nu);
    theta
}
