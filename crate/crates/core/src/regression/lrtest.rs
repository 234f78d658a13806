//! Likelihood-ratio test of constant against varying precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi_squared_sf, log_gamma_unchecked};

use super::fit::FittedModel;

/// Which fit plays the role of the hatted estimates in the expanded
/// per-observation form of the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HatAssignment {
    /// Hats are the unrestricted (varying precision) estimates.
    HatUnrestricted,
    /// Hats are the restricted (constant precision) estimates.
    HatRestricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    /// 2(ℓ_full − ℓ_reduced).
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// The expanded form evaluated under `assignment`.
    pub expanded_statistic: f64,
    pub assignment: HatAssignment,
}

const AGREEMENT: f64 = 1e-8;

/// Tests H₀: ν₂ = … = ν_q = 0. `reduced` must be the intercept-only
/// precision model fitted to the same response and mean design.
pub fn lr_test_precision(full: &FittedModel, reduced: &FittedModel) -> Result<LrTest> {
    let (fs, rs) = (full.spec(), reduced.spec());
    if fs.y() != rs.y() {
        return Err(Error::NotNested("responses differ".into()));
    }
    if fs.x() != rs.x() || fs.mean_link() != rs.mean_link() {
        return Err(Error::NotNested("mean submodels differ".into()));
    }
    if fs.precision_link() != rs.precision_link() {
        return Err(Error::NotNested("precision links differ".into()));
    }
    if rs.q() != 1 || rs.z().column(0) != fs.z().column(0) {
        return Err(Error::NotNested(
            "reduced precision design must be the first column of the full design".into(),
        ));
    }

    let df = fs.q() - 1;
    let mut statistic = 2.0 * (full.loglik - reduced.loglik);
    if statistic < -AGREEMENT {
        return Err(Error::NotNested(format!(
            "reduced model fits better than full model (2Δℓ = {statistic})"
        )));
    }
    let hat_full = expanded(full, reduced);
    let hat_reduced = expanded(reduced, full);
    let (assignment, expanded_statistic) = if (hat_full - statistic).abs() <= AGREEMENT {
        (HatAssignment::HatUnrestricted, hat_full)
    } else if (hat_reduced - statistic).abs() <= AGREEMENT {
        (HatAssignment::HatRestricted, hat_reduced)
    } else {
        return Err(Error::InvalidConfig(format!(
            "expanded statistic disagrees with 2Δℓ = {statistic} ({hat_full}, {hat_reduced})"
        )));
    };
    statistic = statistic.max(0.0);
    let p_value = if df == 0 {
        1.0
    } else {
        chi_squared_sf(statistic, df as f64)?
    };
    Ok(LrTest {
        statistic,
        df,
        p_value,
        expanded_statistic,
        assignment,
    })
}

/// 2 Σᵢ { (α̂ᵢ − α̃ᵢ) y*ᵢ − (φ̂ᵢ − φ̃ᵢ) ln(1+yᵢ) − [ln Γ(α̂ᵢ) − ln Γ(α̃ᵢ)]
///        − [ln Γ(φ̂ᵢ+2) − ln Γ(φ̃ᵢ+2)] + [ln Γ(κ̂ᵢ) − ln Γ(κ̃ᵢ)] }
fn expanded(hat: &FittedModel, tilde: &FittedModel) -> f64 {
    let y = hat.spec().y();
    let mut sum = 0.0;
    for i in 0..y.len() {
        let (mh, ph) = (hat.mu_hat[i], hat.phi_hat[i]);
        let (mt, pt) = (tilde.mu_hat[i], tilde.phi_hat[i]);
        let (ah, at) = (mh * (1.0 + ph), mt * (1.0 + pt));
        let (kh, kt) = (ah + ph + 2.0, at + pt + 2.0);
        let y_star = y[i].ln() - y[i].ln_1p();
        sum += (ah - at) * y_star
            - (ph - pt) * y[i].ln_1p()
            - (log_gamma_unchecked(ah) - log_gamma_unchecked(at))
            - (log_gamma_unchecked(ph + 2.0) - log_gamma_unchecked(pt + 2.0))
            + (log_gamma_unchecked(kh) - log_gamma_unchecked(kt));
    }
    2.0 * sum
}
