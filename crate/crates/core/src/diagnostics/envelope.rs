use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::MeanPrecisionParams;
use crate::error::{Error, Result};
use crate::regression::{fit, FitOptions, FittedModel};
use crate::special::normal_quantile_unchecked;

use super::residuals::{quantile_residuals, quantile_residuals_at};

/// Refits allowed to fail before the envelope is abandoned.
pub const MAX_FAILED_FRACTION: f64 = 0.2;
pub const MIN_REPLICATES: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    pub replicates: usize,
    pub band_level: f64,
    pub seed: u64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            replicates: 100,
            band_level: 0.95,
            seed: 0,
        }
    }
}

/// Pointwise bands for the sorted quantile residuals of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBands {
    /// Normal scores Φ⁻¹((i − 3/8)/(n + 1/4)) for plotting.
    pub theoretical: Vec<f64>,
    pub sorted_residuals: Vec<f64>,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
    /// Replicates that refitted successfully and enter the bands.
    pub replicates: usize,
    pub failed: usize,
    pub band_level: f64,
}

impl EnvelopeBands {
    /// Fraction of sorted residuals inside [lower, upper].
    pub fn coverage(&self) -> f64 {
        let inside = self
            .sorted_residuals
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(r, (lo, hi))| *lo <= *r && *r <= *hi)
            .count();
        inside as f64 / self.sorted_residuals.len() as f64
    }
}

/// Simulates from the fitted model, refits and collects sorted quantile
/// residuals. Replicate r draws from a ChaCha8 stream seeded with
/// `seed + r`, so the bands do not depend on thread scheduling.
pub fn simulated_envelope(m: &FittedModel, options: &EnvelopeOptions) -> Result<EnvelopeBands> {
    let EnvelopeOptions {
        replicates,
        band_level,
        seed,
    } = *options;
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidConfig(format!(
            "envelope needs at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    if !(band_level > 0.0 && band_level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "band level must lie in (0, 1), got {band_level}"
        )));
    }
    let n = m.spec().n();
    let params: Vec<MeanPrecisionParams> = (0..n)
        .map(|i| MeanPrecisionParams::new(m.mu_hat[i], m.phi_hat[i]))
        .collect::<Result<_>>()?;
    let refit_options = FitOptions {
        start: Some((m.beta_hat.clone(), m.nu_hat.clone())),
        vcov: m.vcov_source,
        ..FitOptions::default()
    };

    let runs: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let y = DVector::from_iterator(n, params.iter().map(|p| p.sample_with(&mut rng, 1)[0]));
            let spec = m.spec().with_response(y).ok()?;
            let refit = fit(&spec, &refit_options).ok()?;
            let mut res = quantile_residuals_at(spec.y(), &refit.mu_hat, &refit.phi_hat)
                .values
                .as_slice()
                .to_vec();
            res.sort_by(f64::total_cmp);
            Some(res)
        })
        .collect();

    let ok: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    let failed = replicates - ok.len();
    if failed as f64 > MAX_FAILED_FRACTION * replicates as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: replicates,
            allowed: MAX_FAILED_FRACTION,
        });
    }

    let lo_p = 0.5 * (1.0 - band_level);
    let hi_p = 0.5 * (1.0 + band_level);
    let mut lower = Vec::with_capacity(n);
    let mut median = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut column = vec![0.0; ok.len()];
    for i in 0..n {
        for (slot, run) in column.iter_mut().zip(&ok) {
            *slot = run[i];
        }
        column.sort_by(f64::total_cmp);
        lower.push(quantile_type7(&column, lo_p));
        median.push(quantile_type7(&column, 0.5));
        upper.push(quantile_type7(&column, hi_p));
    }

    let mut sorted_residuals = quantile_residuals(m).values.as_slice().to_vec();
    sorted_residuals.sort_by(f64::total_cmp);
    let theoretical = (1..=n)
        .map(|i| normal_quantile_unchecked((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect();

    Ok(EnvelopeBands {
        theoretical,
        sorted_residuals,
        lower,
        median,
        upper,
        replicates: ok.len(),
        failed,
        band_level,
    })
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7) of an ascending slice.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
