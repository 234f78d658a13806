//! Monte Carlo studies of the estimator and of the residuals under
//!
//! ```text
//! log μᵢ = β₀ + β₁ xᵢ,   log φᵢ = ν₀ + ν₁ zᵢ,   xᵢ, zᵢ ~ U(0, 1)
//! ```
//!
//! with the covariates drawn once and held fixed across replications.
//! Replication r draws its responses from a ChaCha8 stream seeded with
//! `seed + r`; results are collected by replication index so reports do not
//! depend on the number of worker threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{pearson_residuals, quantile_residuals};
use crate::distribution::MeanPrecisionParams;
use crate::error::{Error, Result};
use crate::regression::{fit, FitOptions, FittedModel, Link, ModelSpec};
use crate::special::normal_quantile_unchecked;

pub const MAX_FAILED_FRACTION: f64 = 0.05;
pub const COVERAGE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];
pub const PARAMETER_NAMES: [&str; 4] = ["beta0", "beta1", "nu0", "nu1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub replications: usize,
    pub true_beta: [f64; 2],
    pub true_nu: [f64; 2],
    pub seed: u64,
    pub covariate_seed: u64,
    /// Largest fraction of replications allowed to fail before the run is
    /// reported as an error.
    #[serde(default = "default_max_failed")]
    pub max_failed_fraction: f64,
}

fn default_max_failed() -> f64 {
    MAX_FAILED_FRACTION
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 150,
            replications: 500,
            true_beta: [2.0, -1.6],
            true_nu: [2.6, -2.0],
            seed: 1,
            covariate_seed: 0,
            max_failed_fraction: MAX_FAILED_FRACTION,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        if self.n <= 4 {
            return Err(Error::InvalidConfig(format!(
                "n must exceed 4, got {}",
                self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.max_failed_fraction) {
            return Err(Error::InvalidConfig(format!(
                "max_failed_fraction must lie in [0, 1], got {}",
                self.max_failed_fraction
            )));
        }
        if self
            .true_beta
            .iter()
            .chain(&self.true_nu)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig(
                "true coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    /// (β₀, β₁, ν₀, ν₁).
    pub fn truth(&self) -> [f64; 4] {
        [
            self.true_beta[0],
            self.true_beta[1],
            self.true_nu[0],
            self.true_nu[1],
        ]
    }

    /// Design matrices [1, x] and [1, z]; x is drawn before z.
    pub fn design(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.covariate_seed);
        let x: Vec<f64> = (0..self.n).map(|_| rng.random::<f64>()).collect();
        let z: Vec<f64> = (0..self.n).map(|_| rng.random::<f64>()).collect();
        let xm = DMatrix::from_fn(self.n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let zm = DMatrix::from_fn(self.n, 2, |i, j| if j == 0 { 1.0 } else { z[i] });
        (xm, zm)
    }

    /// True (μᵢ, φᵢ) at the fixed design.
    pub fn parameters(&self, x: &DMatrix<f64>, z: &DMatrix<f64>) -> Vec<MeanPrecisionParams> {
        let beta = DVector::from_column_slice(&self.true_beta);
        let nu = DVector::from_column_slice(&self.true_nu);
        let eta1 = x * beta;
        let eta2 = z * nu;
        (0..self.n)
            .map(|i| {
                MeanPrecisionParams::new(eta1[i].exp(), eta2[i].exp()).expect("finite predictors")
            })
            .collect()
    }

    /// Responses of replication `r`.
    pub fn simulate(&self, params: &[MeanPrecisionParams], r: usize) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(r as u64));
        DVector::from_iterator(
            params.len(),
            params.iter().map(|p| p.sample_with(&mut rng, 1)[0]),
        )
    }

    /// The model specification of replication `r`.
    pub fn replicate_spec(&self, r: usize) -> Result<ModelSpec> {
        let (x, z) = self.design();
        let params = self.parameters(&x, &z);
        let y = self.simulate(&params, r);
        ModelSpec::new(y, x, z, Link::Log, Link::Log)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub level: f64,
    pub rate: f64,
}

/// Summary of one coefficient over the successful replications. `sd` uses
/// divisor R so that rmse² = bias² + sd²; with a single replication sd = 0
/// and rmse = |bias|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    pub sd: f64,
    pub mean_se: f64,
    pub coverage: Vec<Coverage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub successful: usize,
    pub failed_fits: usize,
    pub parameters: Vec<ParameterSummary>,
}

impl ScenarioReport {
    /// Long-format rows (parameter, metric, value).
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        for p in &self.parameters {
            let mut push = |metric: String, value: f64| rows.push((p.name.clone(), metric, value));
            push("truth".into(), p.truth);
            push("mean".into(), p.mean);
            push("bias".into(), p.bias);
            push("rmse".into(), p.rmse);
            push("sd".into(), p.sd);
            push("mean_se".into(), p.mean_se);
            for c in &p.coverage {
                push(format!("coverage_{:.2}", c.level), c.rate);
            }
        }
        rows
    }
}

struct Replicate {
    theta: [f64; 4],
    se: [f64; 4],
}

fn check_failures(failed: usize, total: usize, allowed: f64) -> Result<()> {
    if failed == total || failed as f64 > allowed * total as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total,
            allowed,
        });
    }
    Ok(())
}

/// Runs `work` on every replication in parallel and returns the successful
/// results, tagged with their replication index and in that order, together
/// with the failure count.
fn replicate<T: Send>(
    cfg: &ScenarioConfig,
    work: impl Fn(&FittedModel) -> T + Sync,
) -> Result<(Vec<(usize, T)>, usize)> {
    cfg.validate()?;
    let (x, z) = cfg.design();
    let params = cfg.parameters(&x, &z);
    let results: Vec<Option<T>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let y = cfg.simulate(&params, r);
            let spec = ModelSpec::new(y, x.clone(), z.clone(), Link::Log, Link::Log).ok()?;
            let m = fit(&spec, &FitOptions::default()).ok()?;
            Some(work(&m))
        })
        .collect();
    let ok: Vec<(usize, T)> = results
        .into_iter()
        .enumerate()
        .filter_map(|(r, res)| res.map(|t| (r, t)))
        .collect();
    let failed = cfg.replications - ok.len();
    check_failures(failed, cfg.replications, cfg.max_failed_fraction)?;
    Ok((ok, failed))
}

/// Bias, RMSE, standard errors and interval coverage of the MLE.
pub fn run_scenario_one(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let (tagged, failed) = replicate(cfg, |m| {
        let theta = m.theta();
        let se = m.standard_errors();
        Replicate {
            theta: [theta[0], theta[1], theta[2], theta[3]],
            se: [se[0], se[1], se[2], se[3]],
        }
    })?;
    let reps: Vec<Replicate> = tagged.into_iter().map(|(_, r)| r).collect();
    let count = reps.len() as f64;
    let truth = cfg.truth();
    let z: Vec<f64> = COVERAGE_LEVELS
        .iter()
        .map(|l| normal_quantile_unchecked(0.5 + 0.5 * l))
        .collect();
    let parameters = (0..4)
        .map(|j| {
            let mean = reps.iter().map(|r| r.theta[j]).sum::<f64>() / count;
            let sd = (reps
                .iter()
                .map(|r| (r.theta[j] - mean).powi(2))
                .sum::<f64>()
                / count)
                .sqrt();
            let mse = reps
                .iter()
                .map(|r| (r.theta[j] - truth[j]).powi(2))
                .sum::<f64>()
                / count;
            let mean_se = reps.iter().map(|r| r.se[j]).sum::<f64>() / count;
            let coverage = COVERAGE_LEVELS
                .iter()
                .zip(&z)
                .map(|(&level, &zq)| {
                    let hits = reps
                        .iter()
                        .filter(|r| (r.theta[j] - truth[j]).abs() <= zq * r.se[j])
                        .count();
                    Coverage {
                        level,
                        rate: hits as f64 / count,
                    }
                })
                .collect();
            ParameterSummary {
                name: PARAMETER_NAMES[j].to_string(),
                truth: truth[j],
                mean,
                bias: mean - truth[j],
                rmse: mse.sqrt(),
                sd,
                mean_se,
                coverage,
            }
        })
        .collect();
    Ok(ScenarioReport {
        config: cfg.clone(),
        successful: reps.len(),
        failed_fits: failed,
        parameters,
    })
}

/// Pooled moments; `sd` and `skewness` use divisor N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        Self {
            count: values.len(),
            mean,
            sd: m2.sqrt(),
            skewness: m3 / m2.powf(1.5),
        }
    }
}

/// One point of a per-replication QQ plot: the `rank`-th smallest residuals
/// of replication `replication` against the normal score for that rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqRow {
    pub replication: usize,
    pub rank: usize,
    pub theoretical: f64,
    pub quantile_residual: f64,
    pub pearson_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub config: ScenarioConfig,
    pub successful: usize,
    pub failed_fits: usize,
    pub quantile: Moments,
    pub pearson: Moments,
    pub qq: Vec<QqRow>,
}

/// Distribution of quantile and Pearson residuals at the fitted models.
pub fn run_scenario_two(cfg: &ScenarioConfig) -> Result<ResidualReport> {
    let (reps, failed) = replicate(cfg, |m| {
        let mut q = quantile_residuals(m).values.as_slice().to_vec();
        let mut p = pearson_residuals(m).values.as_slice().to_vec();
        q.sort_by(f64::total_cmp);
        p.sort_by(f64::total_cmp);
        (q, p)
    })?;
    let n = cfg.n;
    let scores: Vec<f64> = (1..=n)
        .map(|i| normal_quantile_unchecked((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect();
    let pooled_q: Vec<f64> = reps
        .iter()
        .flat_map(|(_, (q, _))| q.iter().copied())
        .collect();
    let pooled_p: Vec<f64> = reps
        .iter()
        .flat_map(|(_, (_, p))| p.iter().copied())
        .collect();
    let scores = &scores;
    let qq = reps
        .iter()
        .flat_map(|(r, (q, p))| {
            (0..n).map(move |i| QqRow {
                replication: *r,
                rank: i + 1,
                theoretical: scores[i],
                quantile_residual: q[i],
                pearson_residual: p[i],
            })
        })
        .collect();
    Ok(ResidualReport {
        config: cfg.clone(),
        successful: reps.len(),
        failed_fits: failed,
        quantile: Moments::of(&pooled_q),
        pearson: Moments::of(&pooled_p),
        qq,
    })
}
