//! Independent numerical oracles shared by the integration tests. None of
//! these call into the code paths they are used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for j in 0..7 {
        let x = h * GK_NODES[j];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1) + recurse(f, m, b, 0.5 * tol, depth - 1)
    }
    recurse(&f, a, b, tol, 40)
}

/// ∫₀^∞ f(y) dy through the substitution y = t/(1−t).
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    integrate(
        |t: f64| {
            if t <= 0.0 || t >= 1.0 {
                return 0.0;
            }
            let y = t / (1.0 - t);
            f(y) / ((1.0 - t) * (1.0 - t))
        },
        0.0,
        1.0,
        tol,
    )
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against a cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    1.627_6 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Max-norm relative error ‖a − b‖∞ / ‖b‖∞.
pub fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let diff = (a - b).amax();
    diff / b.amax().max(f64::MIN_POSITIVE)
}

pub fn rel_err_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).amax();
    diff / b.amax().max(f64::MIN_POSITIVE)
}

/// Central-difference gradient with steps scaled to each coordinate.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        let mut up = x.clone();
        up[j] += step;
        let mut down = x.clone();
        down[j] -= step;
        g[j] = (f(&up) - f(&down)) / (2.0 * step);
    }
    g
}

/// Central-difference Jacobian of a vector field; column j holds ∂F/∂x_j.
pub fn fd_jacobian<F: Fn(&DVector<f64>) -> DVector<f64>>(
    f: F,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        let mut up = x.clone();
        up[j] += step;
        let mut down = x.clone();
        down[j] -= step;
        let col = (f(&up) - f(&down)) / (2.0 * step);
        jac.set_column(j, &col);
    }
    jac
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divisor n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

use bpreg::distribution::MeanPrecisionParams;
use bpreg::regression::{fit, score, FitOptions, FittedModel};
use bpreg::special::digamma;
use bpreg::{Link, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Intercept plus one U(0,1) column for each submodel.
pub fn uniform_designs(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
    let mut z = x.clone();
    for i in 0..n {
        x[(i, 1)] = rng.random::<f64>();
    }
    for i in 0..n {
        z[(i, 1)] = rng.random::<f64>();
    }
    (x, z)
}

/// Draws y from BP(μᵢ, φᵢ) with log links at (β, ν).
pub fn simulate_log_links(
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
    beta: &[f64],
    nu: &[f64],
    seed: u64,
) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta1 = x * DVector::from_column_slice(beta);
    let eta2 = z * DVector::from_column_slice(nu);
    DVector::from_fn(x.nrows(), |i, _| {
        MeanPrecisionParams::new(eta1[i].exp(), eta2[i].exp())
            .unwrap()
            .sample_with(&mut rng, 1)[0]
    })
}

pub const TRUE_BETA: [f64; 2] = [2.0, -1.6];
pub const TRUE_NU: [f64; 2] = [2.6, -2.0];

/// The two-covariate simulation design with log links.
pub fn scenario_spec(n: usize, covariate_seed: u64, seed: u64) -> ModelSpec {
    let (x, z) = uniform_designs(n, covariate_seed);
    let y = simulate_log_links(&x, &z, &TRUE_BETA, &TRUE_NU, seed);
    ModelSpec::new(y, x, z, Link::Log, Link::Log).unwrap()
}

/// Random design, links and coefficients with a response drawn from the
/// model: n ∈ {20, 50}, p, q ∈ {1, 2, 3}.
pub fn random_instance(seed: u64) -> (ModelSpec, DVector<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if seed.is_multiple_of(2) { 20 } else { 50 };
    let p = 1 + (seed as usize % 3);
    let q = 1 + ((seed as usize / 3) % 3);
    let links = [Link::Log, Link::Sqrt, Link::Identity];
    let mean_link = links[(seed as usize / 2) % 3];
    let precision_link = links[(seed as usize / 5) % 3];
    // Nonnegative covariates keep identity/sqrt predictors positive when
    // all coefficients are positive.
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() });
    let z = DMatrix::from_fn(n, q, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() });
    let draw_coef = |rng: &mut ChaCha8Rng, link: Link, len: usize, level: f64| {
        DVector::from_fn(len, |j, _| match link {
            Link::Log => {
                if j == 0 {
                    level.ln()
                } else {
                    rng.random_range(-1.0..1.0)
                }
            }
            Link::Identity => {
                if j == 0 {
                    level
                } else {
                    rng.random_range(0.0..1.0)
                }
            }
            Link::Sqrt => {
                if j == 0 {
                    level.sqrt()
                } else {
                    rng.random_range(0.0..0.5)
                }
            }
        })
    };
    let mu_level = rng.random_range(0.5..4.0);
    let phi_level = rng.random_range(2.0..30.0);
    let beta = draw_coef(&mut rng, mean_link, p, mu_level);
    let nu = draw_coef(&mut rng, precision_link, q, phi_level);
    let eta1 = &x * &beta;
    let eta2 = &z * &nu;
    let y = DVector::from_fn(n, |i, _| {
        let mu = mean_link.inverse(eta1[i]).unwrap();
        let phi = precision_link.inverse(eta2[i]).unwrap();
        MeanPrecisionParams::new(mu, phi)
            .unwrap()
            .sample_with(&mut rng, 1)[0]
    });
    let spec = ModelSpec::new(y, x, z, mean_link, precision_link).unwrap();
    (spec, beta, nu)
}

/// Fitted model whose precision design repeats the mean covariate so that
/// every scheme applies. Covariate column 1 of X equals column 1 of Z.
pub fn shared_covariate_fit(seed: u64) -> FittedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if seed.is_multiple_of(2) { 30 } else { 60 };
    let extra = seed.is_multiple_of(3);
    let cols = if extra { 3 } else { 2 };
    let x = DMatrix::from_fn(
        n,
        cols,
        |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() },
    );
    let z = x.columns(0, 2).into_owned();
    let beta: Vec<f64> = (0..cols).map(|j| [1.0, -1.2, 0.7][j]).collect();
    let y = simulate_log_links(&x, &z, &beta, &[2.5, -1.5], seed + 100);
    let spec = ModelSpec::new(y, x, z, Link::Log, Link::Log).unwrap();
    fit(&spec, &FitOptions::default()).unwrap()
}

/// Central difference in ω of the score of the model rebuilt with
/// `perturb(ω)` applied to observation i.
pub fn fd_delta<F>(m: &FittedModel, h: f64, perturb: F) -> DMatrix<f64>
where
    F: Fn(usize, f64) -> ModelSpec,
{
    let n = m.spec().n();
    let k = m.n_params();
    let mut out = DMatrix::zeros(k, n);
    for i in 0..n {
        let up = score(&perturb(i, h), &m.beta_hat, &m.nu_hat).unwrap();
        let down = score(&perturb(i, -h), &m.beta_hat, &m.nu_hat).unwrap();
        out.set_column(i, &((up - down) / (2.0 * h)));
    }
    out
}

/// xᵢ μᵢ ∂ℓᵢ/∂μ stacked over zᵢ φᵢ ∂ℓᵢ/∂φ (log links), evaluated from the
/// density's derivatives written out term by term.
pub fn case_weight_columns(m: &FittedModel) -> DMatrix<f64> {
    let spec = m.spec();
    let (p, q, n) = (spec.p(), spec.q(), spec.n());
    let mut out = DMatrix::zeros(p + q, n);
    for i in 0..n {
        let (y, mu, phi) = (spec.y()[i], m.mu_hat[i], m.phi_hat[i]);
        let alpha = mu * (1.0 + phi);
        let kappa = alpha + phi + 2.0;
        let dl_dalpha = y.ln() - (1.0 + y).ln() - digamma(alpha).unwrap() + digamma(kappa).unwrap();
        let dl_dmu = (1.0 + phi) * dl_dalpha;
        let dl_dphi =
            mu * dl_dalpha - (1.0 + y).ln() - digamma(phi + 2.0).unwrap() + digamma(kappa).unwrap();
        for j in 0..p {
            out[(j, i)] = spec.x()[(i, j)] * mu * dl_dmu;
        }
        for k in 0..q {
            out[(p + k, i)] = spec.z()[(i, k)] * phi * dl_dphi;
        }
    }
    out
}

pub fn column_sd(c: DVector<f64>) -> f64 {
    let mean = c.mean();
    (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c.len() as f64 - 1.0)).sqrt()
}
