//! Maximum-likelihood fitting by Fisher scoring with step halving, falling
//! back to BFGS on −ℓ when scoring stalls.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::normal_quantile_unchecked;

use super::model::{join_theta, log_likelihood, split_theta, ModelSpec, ScoreWorkspace};

/// Which matrix is inverted for the covariance of θ̂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcovSource {
    /// (−H)⁻¹, the observed information.
    #[default]
    ObservedHessian,
    /// I⁻¹, the expected information.
    ExpectedInformation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub relative_tolerance: f64,
    pub max_step_halvings: usize,
    pub vcov: VcovSource,
    /// Starting (β, ν). When absent, moment-based starting values are used.
    pub start: Option<(DVector<f64>, DVector<f64>)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            relative_tolerance: 1e-10,
            max_step_halvings: 30,
            vcov: VcovSource::ObservedHessian,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMethod {
    FisherScoring,
    QuasiNewton,
}

/// One accepted iteration of the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub method: StepMethod,
    pub loglik: f64,
    /// max |U| at the new iterate.
    pub max_abs_score: f64,
    pub step_length: f64,
}

/// A converged fit together with its curvature matrices.
#[derive(Debug, Clone)]
pub struct FittedModel {
    spec: ModelSpec,
    pub beta_hat: DVector<f64>,
    pub nu_hat: DVector<f64>,
    pub loglik: f64,
    pub hessian: DMatrix<f64>,
    pub fisher: DMatrix<f64>,
    pub vcov: DMatrix<f64>,
    pub vcov_source: VcovSource,
    pub converged: bool,
    pub iterations: usize,
    pub mu_hat: DVector<f64>,
    pub phi_hat: DVector<f64>,
    pub trace: Vec<IterationRecord>,
}

/// A two-sided Wald interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl FittedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn theta(&self) -> DVector<f64> {
        join_theta(&self.beta_hat, &self.nu_hat)
    }

    pub fn n_params(&self) -> usize {
        self.beta_hat.len() + self.nu_hat.len()
    }

    pub fn standard_errors(&self) -> DVector<f64> {
        self.vcov.diagonal().map(f64::sqrt)
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik + 2.0 * self.n_params() as f64
    }

    pub fn bic(&self) -> f64 {
        -2.0 * self.loglik + self.n_params() as f64 * (self.spec.n() as f64).ln()
    }

    /// Workspace quantities at θ̂.
    pub fn workspace(&self) -> ScoreWorkspace {
        ScoreWorkspace::new(&self.spec, &self.beta_hat, &self.nu_hat)
            .expect("fitted parameters are valid")
    }

    /// θ̂ᵢ ± z₁₋γ/₂ √vcovᵢᵢ for each parameter, β first.
    pub fn confidence_intervals(&self, level: f64) -> Result<Vec<Interval>> {
        if !(level.is_finite() && level > 0.0 && level < 1.0) {
            return Err(domain(
                "confidence_intervals",
                format!("level must lie in (0, 1), got {level}"),
            ));
        }
        let z = normal_quantile_unchecked(0.5 + 0.5 * level);
        let theta = self.theta();
        let var = self.vcov.diagonal();
        if var.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NotPositiveDefinite("covariance"));
        }
        Ok(theta
            .iter()
            .zip(var.iter())
            .map(|(&t, &v)| {
                let half = z * v.sqrt();
                Interval {
                    lower: t - half,
                    upper: t + half,
                }
            })
            .collect())
    }
}

/// Moment-based starting values: OLS of g₁(y + 0.01) on X for β, and ν
/// reproducing a constant precision φ̃ = mean(μ̃(1+μ̃)) / σ̂², floored at 0.1.
pub fn starting_values(spec: &ModelSpec) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = spec.n();
    let ml = spec.mean_link();
    let pl = spec.precision_link();
    let target = spec.y().map(|y| ml.link(y + 0.01));
    let mut beta = least_squares(spec.x(), &target)?;
    let eta = spec.x() * &beta;
    let mu: Option<Vec<f64>> = eta.iter().map(|&e| ml.inverse(e)).collect();
    let mu = match mu {
        Some(mu) => DVector::from_vec(mu),
        None => {
            // Fitted means outside the link's range: start from the overall mean.
            let mean = spec.y().mean();
            beta = least_squares(spec.x(), &DVector::from_element(n, ml.link(mean)))?;
            DVector::from_element(n, mean)
        }
    };
    let dof = (n - spec.p()).max(1) as f64;
    let rss: f64 = spec
        .y()
        .iter()
        .zip(mu.iter())
        .map(|(y, m)| (y - m).powi(2))
        .sum();
    let sigma2 = rss / dof;
    let v_mean = mu.iter().map(|m| m * (1.0 + m)).sum::<f64>() / n as f64;
    let phi = v_mean / sigma2;
    let phi = if phi.is_finite() { phi.max(0.1) } else { 0.1 };
    let nu = least_squares(spec.z(), &DVector::from_element(n, pl.link(phi)))?;
    Ok((beta, nu))
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12 * svd.singular_values.max())
        .map_err(|_| Error::Singular("least-squares design"))
}

fn loglik_or_neg_inf(spec: &ModelSpec, theta: &DVector<f64>) -> f64 {
    let (b, v) = split_theta(theta, spec.p());
    match log_likelihood(spec, &b, &v) {
        Ok(l) if l.is_finite() => l,
        _ => f64::NEG_INFINITY,
    }
}

// Near the optimum the predicted gain of a scoring step falls below the
// rounding error of ℓ; decreases within this band are not treated as failures.
fn loglik_noise(loglik: f64) -> f64 {
    1e-12 * loglik.abs().max(1.0)
}

fn rel_change(old: f64, new: f64) -> f64 {
    (new - old).abs() / old.abs().max(1.0)
}

struct State {
    theta: DVector<f64>,
    loglik: f64,
    score: DVector<f64>,
    fisher: DMatrix<f64>,
}

impl State {
    fn at(spec: &ModelSpec, theta: DVector<f64>) -> Result<Self> {
        let (b, v) = split_theta(&theta, spec.p());
        let ws = ScoreWorkspace::new(spec, &b, &v)?;
        let loglik = log_likelihood(spec, &b, &v)?;
        Ok(Self {
            score: ws.score(spec),
            fisher: ws.fisher(spec),
            theta,
            loglik,
        })
    }
}

pub fn fit(spec: &ModelSpec, options: &FitOptions) -> Result<FittedModel> {
    if spec.p() + spec.q() >= spec.n() {
        return Err(Error::Dimension(format!(
            "need p + q < n to fit, got p={} q={} n={}",
            spec.p(),
            spec.q(),
            spec.n()
        )));
    }
    if options.max_iterations == 0 {
        return Err(Error::InvalidConfig(
            "max_iterations must be positive".into(),
        ));
    }
    let (beta0, nu0) = match &options.start {
        Some((b, v)) => {
            if b.len() != spec.p() || v.len() != spec.q() {
                return Err(Error::Dimension(format!(
                    "starting values have {} and {} entries, expected {} and {}",
                    b.len(),
                    v.len(),
                    spec.p(),
                    spec.q()
                )));
            }
            (b.clone(), v.clone())
        }
        None => starting_values(spec)?,
    };
    let mut state = State::at(spec, join_theta(&beta0, &nu0))?;
    let mut trace = Vec::new();
    let mut last_change = f64::INFINITY;
    let mut iteration = 0;
    let mut converged = false;

    while iteration < options.max_iterations {
        if state.score.amax() <= options.gradient_tolerance
            && last_change <= options.relative_tolerance
        {
            converged = true;
            break;
        }
        let direction = state
            .fisher
            .clone()
            .cholesky()
            .ok_or(Error::Singular("Fisher information"))?
            .solve(&state.score);

        let floor = state.loglik - loglik_noise(state.loglik);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_step_halvings {
            let candidate = &state.theta + &direction * step;
            let ll = loglik_or_neg_inf(spec, &candidate);
            if ll >= floor {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }

        iteration += 1;
        match accepted {
            Some(theta) => {
                let next = State::at(spec, theta)?;
                last_change = rel_change(state.loglik, next.loglik);
                state = next;
                trace.push(IterationRecord {
                    iteration,
                    method: StepMethod::FisherScoring,
                    loglik: state.loglik,
                    max_abs_score: state.score.amax(),
                    step_length: step,
                });
            }
            None => {
                // No ascent along the scoring direction; at a flat optimum
                // this is rounding, otherwise hand over to BFGS.
                if state.score.amax() <= options.gradient_tolerance {
                    converged = true;
                    break;
                }
                let remaining = options.max_iterations - iteration + 1;
                let (next, used, ok) =
                    bfgs(spec, state, remaining, options, &mut trace, iteration)?;
                state = next;
                iteration += used.saturating_sub(1);
                converged = ok;
                break;
            }
        }
    }

    if !converged {
        return Err(Error::NotConverged {
            iterations: iteration,
            trace,
        });
    }
    finish(spec, state, iteration, trace, options.vcov)
}

/// BFGS on f = −ℓ with Armijo backtracking, seeded with I⁻¹ as the inverse
/// Hessian approximation. Returns the final state, iterations used and
/// whether the convergence criteria were met.
fn bfgs(
    spec: &ModelSpec,
    mut state: State,
    max_iter: usize,
    options: &FitOptions,
    trace: &mut Vec<IterationRecord>,
    first_iteration: usize,
) -> Result<(State, usize, bool)> {
    let k = state.theta.len();
    let mut h_inv = state
        .fisher
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| DMatrix::identity(k, k));
    let mut used = 0;
    while used < max_iter {
        used += 1;
        let grad = -&state.score;
        let mut dir = -(&h_inv * &grad);
        let mut slope = grad.dot(&dir);
        if slope >= 0.0 {
            h_inv = DMatrix::identity(k, k);
            dir = -grad.clone();
            slope = grad.dot(&dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_step_halvings.max(40) {
            let candidate = &state.theta + &dir * step;
            let ll = loglik_or_neg_inf(spec, &candidate);
            if -ll <= -state.loglik + 1e-4 * step * slope {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        let Some(theta) = accepted else {
            let ok = state.score.amax() <= options.gradient_tolerance;
            return Ok((state, used, ok));
        };
        let next = State::at(spec, theta)?;
        let change = rel_change(state.loglik, next.loglik);
        let s = &next.theta - &state.theta;
        let yv = -&next.score - &grad;
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(k, k);
            let left = &eye - (&s * yv.transpose()) * rho;
            let right = &eye - (&yv * s.transpose()) * rho;
            h_inv = &left * &h_inv * &right + (&s * s.transpose()) * rho;
        }
        state = next;
        trace.push(IterationRecord {
            iteration: first_iteration + used - 1,
            method: StepMethod::QuasiNewton,
            loglik: state.loglik,
            max_abs_score: state.score.amax(),
            step_length: step,
        });
        if state.score.amax() <= options.gradient_tolerance && change <= options.relative_tolerance
        {
            return Ok((state, used, true));
        }
    }
    Ok((state, used, false))
}

fn finish(
    spec: &ModelSpec,
    state: State,
    iterations: usize,
    trace: Vec<IterationRecord>,
    source: VcovSource,
) -> Result<FittedModel> {
    let (beta_hat, nu_hat) = split_theta(&state.theta, spec.p());
    let ws = ScoreWorkspace::new(spec, &beta_hat, &nu_hat)?;
    let hessian = ws.hessian(spec);
    let fisher = state.fisher;
    let vcov = match source {
        VcovSource::ObservedHessian => symmetric_inverse(-&hessian, "negative Hessian")?,
        VcovSource::ExpectedInformation => symmetric_inverse(fisher.clone(), "Fisher information")?,
    };
    Ok(FittedModel {
        spec: spec.clone(),
        beta_hat,
        nu_hat,
        loglik: state.loglik,
        hessian,
        fisher,
        vcov,
        vcov_source: source,
        converged: true,
        iterations,
        mu_hat: ws.mu,
        phi_hat: ws.phi,
        trace,
    })
}

fn symmetric_inverse(m: DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    let inv = m
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(name))?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}
