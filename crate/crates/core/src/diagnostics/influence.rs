//! Local influence: perturbation matrices Δ and normal curvatures.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::FittedModel;

/// How the model is perturbed. Covariate indices are zero-based column
/// positions in X (`t`) or Z (`k`). Scale factors default to the sample
/// standard deviation of the perturbed column.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationScheme {
    /// ℓ(θ, ω) = Σ ωᵢ ℓᵢ, ω₀ = 1.
    CaseWeights,
    /// yᵢ(ω) = yᵢ + ωᵢ √(μ̂ᵢ(1+μ̂ᵢ)/φ̂ᵢ), ω₀ = 0.
    Response,
    /// xᵢₜ(ω) = xᵢₜ + ωᵢ sᵢ.
    MeanCovariate {
        t: usize,
        scale: Option<DVector<f64>>,
    },
    /// zᵢₖ(ω) = zᵢₖ + ωᵢ ṡᵢ.
    PrecisionCovariate {
        k: usize,
        scale: Option<DVector<f64>>,
    },
    /// The same covariate enters X at column t and Z at column k and is
    /// perturbed in both with a common scale.
    Simultaneous {
        t: usize,
        k: usize,
        scale: Option<DVector<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceSubset {
    #[default]
    Theta,
    BetaOnly,
    NuOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceResult {
    pub delta: DMatrix<f64>,
    /// B̂ = Δᵀ M Δ with M = Ĥ⁻¹ adjusted for the subset.
    pub curvature_matrix: DMatrix<f64>,
    /// Cᵢ = 2|b̂ᵢᵢ|.
    pub c_indices: DVector<f64>,
    /// Largest curvature over unit directions, 2 λ_max(−B̂).
    pub c_max: f64,
    /// Unit direction attaining `c_max`, signed so its largest entry is positive.
    pub l_max: DVector<f64>,
    /// 2 C̄.
    pub threshold: f64,
    pub subset: InfluenceSubset,
}

impl InfluenceResult {
    /// Observations with Cᵢ above the threshold.
    pub fn flagged(&self) -> Vec<usize> {
        (0..self.c_indices.len())
            .filter(|&i| self.c_indices[i] > self.threshold)
            .collect()
    }
}

pub fn perturbation_matrix(m: &FittedModel, scheme: &PerturbationScheme) -> Result<DMatrix<f64>> {
    let spec = m.spec();
    let ws = m.workspace();
    let (p, q, n) = (spec.p(), spec.q(), spec.n());
    let (x, z) = (spec.x(), spec.z());
    match scheme {
        PerturbationScheme::CaseWeights => Ok(ws.observation_scores(spec)),
        PerturbationScheme::Response => {
            let y = spec.y();
            let mut mean_w = DVector::zeros(n);
            let mut prec_w = DVector::zeros(n);
            for i in 0..n {
                let (mu, phi, yi) = (ws.mu[i], ws.phi[i], y[i]);
                let s = (mu * (1.0 + mu) / phi).sqrt();
                let d8 = (1.0 + phi) / (yi * (1.0 + yi));
                let d9 = mu / (yi * (1.0 + yi)) - 1.0 / (1.0 + yi);
                mean_w[i] = ws.a[i] * d8 * s;
                prec_w[i] = ws.b[i] * d9 * s;
            }
            Ok(stack(
                &scale_columns(x, &mean_w),
                &scale_columns(z, &prec_w),
            ))
        }
        PerturbationScheme::MeanCovariate { t, scale } => {
            check_covariate(x, *t, "mean")?;
            let s = scale_or_sd(x, *t, scale.as_ref())?;
            let bt = m.beta_hat[*t];
            let mut top = scale_columns(x, &(&ws.c * bt));
            add_to_row(&mut top, *t, &ws.a.component_mul(&ws.d_mu));
            let bottom = scale_columns(z, &(&ws.m * bt));
            Ok(scale_delta_columns(stack(&top, &bottom), &s))
        }
        PerturbationScheme::PrecisionCovariate { k, scale } => {
            check_covariate(z, *k, "precision")?;
            let s = scale_or_sd(z, *k, scale.as_ref())?;
            let vk = m.nu_hat[*k];
            let top = scale_columns(x, &(&ws.m * vk));
            let mut bottom = scale_columns(z, &(&ws.w * vk));
            add_to_row(&mut bottom, *k, &ws.b.component_mul(&ws.d_phi));
            Ok(scale_delta_columns(stack(&top, &bottom), &s))
        }
        PerturbationScheme::Simultaneous { t, k, scale } => {
            check_covariate(x, *t, "mean")?;
            check_covariate(z, *k, "precision")?;
            if x.column(*t) != z.column(*k) {
                return Err(Error::InvalidScheme(format!(
                    "mean column {t} and precision column {k} are different covariates"
                )));
            }
            let s = scale_or_sd(x, *t, scale.as_ref())?;
            let (bt, vk) = (m.beta_hat[*t], m.nu_hat[*k]);
            let mut top = scale_columns(x, &(&ws.c * bt + &ws.m * vk));
            add_to_row(&mut top, *t, &ws.a.component_mul(&ws.d_mu));
            let mut bottom = scale_columns(z, &(&ws.w * vk + &ws.m * bt));
            add_to_row(&mut bottom, *k, &ws.b.component_mul(&ws.d_phi));
            debug_assert_eq!(top.nrows() + bottom.nrows(), p + q);
            Ok(scale_delta_columns(stack(&top, &bottom), &s))
        }
    }
}

/// Aᵀ diag(w), the (cols × n) matrix whose column i is wᵢ aᵢ.
fn scale_columns(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.transpose();
    for (i, mut col) in out.column_iter_mut().enumerate() {
        col *= w[i];
    }
    out
}

fn scale_delta_columns(mut delta: DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    for (i, mut col) in delta.column_iter_mut().enumerate() {
        col *= s[i];
    }
    delta
}

fn add_to_row(m: &mut DMatrix<f64>, row: usize, values: &DVector<f64>) {
    for i in 0..m.ncols() {
        m[(row, i)] += values[i];
    }
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

fn check_covariate(design: &DMatrix<f64>, col: usize, which: &str) -> Result<()> {
    if col >= design.ncols() {
        return Err(Error::InvalidScheme(format!(
            "{which} covariate index {col} out of range (design has {} columns)",
            design.ncols()
        )));
    }
    let c = design.column(col);
    if c.iter().all(|&v| v == c[0]) {
        return Err(Error::InvalidScheme(format!(
            "{which} covariate {col} is constant (intercept) and cannot be perturbed"
        )));
    }
    Ok(())
}

fn scale_or_sd(
    design: &DMatrix<f64>,
    col: usize,
    scale: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let n = design.nrows();
    match scale {
        Some(s) if s.len() != n => Err(Error::InvalidScheme(format!(
            "scale vector has length {}, expected {n}",
            s.len()
        ))),
        Some(s) if s.iter().any(|v| !v.is_finite()) => {
            Err(Error::InvalidScheme("scale factors must be finite".into()))
        }
        Some(s) => Ok(s.clone()),
        None => {
            let c = design.column(col);
            let mean = c.mean();
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            Ok(DVector::from_element(n, var.sqrt()))
        }
    }
}

/// Relative asymmetry tolerated in B̂ before the symmetrized eigenproblem.
const SYMMETRY_TOLERANCE: f64 = 1e-8;

pub fn local_influence(
    m: &FittedModel,
    delta: &DMatrix<f64>,
    subset: InfluenceSubset,
) -> Result<InfluenceResult> {
    let (p, q) = (m.beta_hat.len(), m.nu_hat.len());
    let n = m.spec().n();
    if delta.nrows() != p + q || delta.ncols() != n {
        return Err(Error::Dimension(format!(
            "perturbation matrix is {}x{}, expected {}x{n}",
            delta.nrows(),
            delta.ncols(),
            p + q
        )));
    }
    let h = &m.hessian;
    let mut inner = h
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular("Hessian"))?;
    match subset {
        InfluenceSubset::Theta => {}
        InfluenceSubset::BetaOnly => {
            let block = h.view((p, p), (q, q)).into_owned();
            let inv = block
                .lu()
                .try_inverse()
                .ok_or(Error::Singular("precision block of the Hessian"))?;
            let mut v = inner.view_mut((p, p), (q, q));
            v -= inv;
        }
        InfluenceSubset::NuOnly => {
            let block = h.view((0, 0), (p, p)).into_owned();
            let inv = block
                .lu()
                .try_inverse()
                .ok_or(Error::Singular("mean block of the Hessian"))?;
            let mut v = inner.view_mut((0, 0), (p, p));
            v -= inv;
        }
    }
    let inner = (&inner + inner.transpose()) * 0.5;
    let b = delta.tr_mul(&(&inner * delta));
    let scale = b.amax().max(f64::MIN_POSITIVE);
    let asym = (&b - b.transpose()).amax() / scale;
    assert!(
        asym <= SYMMETRY_TOLERANCE,
        "curvature matrix asymmetry {asym}"
    );
    let b = (&b + b.transpose()) * 0.5;

    let c_indices = b.diagonal().map(|v| 2.0 * v.abs());
    let threshold = 2.0 * c_indices.mean();
    let (c_max, l_max) = dominant_direction(&inner, delta);
    Ok(InfluenceResult {
        delta: delta.clone(),
        curvature_matrix: b,
        c_indices,
        c_max,
        l_max,
        threshold,
        subset,
    })
}

/// Leading eigenpair of −B̂ = Δᵀ(−M)Δ through the (p+q)-dimensional
/// factor: with −M = R Rᵀ and A = RᵀΔ, −B̂ = AᵀA shares its nonzero
/// spectrum with AAᵀ.
fn dominant_direction(inner: &DMatrix<f64>, delta: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let n = delta.ncols();
    let neg = -inner;
    let eig = SymmetricEigen::new(neg);
    let mut r = eig.eigenvectors.clone();
    for (j, mut col) in r.column_iter_mut().enumerate() {
        col *= eig.eigenvalues[j].max(0.0).sqrt();
    }
    let a = r.tr_mul(delta);
    let small = SymmetricEigen::new(&a * a.transpose());
    let (idx, &lambda) = small
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty parameter vector");
    let mut l = a.tr_mul(&small.eigenvectors.column(idx));
    let norm = l.norm();
    if lambda <= 0.0 || norm == 0.0 {
        let mut e = DVector::zeros(n);
        if n > 0 {
            e[0] = 1.0;
        }
        return (0.0, e);
    }
    l /= norm;
    let (imax, _) = l
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .unwrap();
    if l[imax] < 0.0 {
        l = -l;
    }
    (2.0 * lambda.max(0.0), l)
}
