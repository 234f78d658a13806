use bpreg::diagnostics::{pearson_residuals, quantile_residuals};
use bpreg::regression::{lr_test_precision, IterationRecord, VcovSource};
use bpreg::special::std_normal_cdf;
use bpreg::{fit, FitOptions, FittedModel, Link, ModelSpec, Submodel};
use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::{Dataset, Format, RunConfig};
use crate::error::CliResult;
use crate::output::{ensure_dir, num, write_csv, write_json};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VcovArg {
    /// Inverse of the negative Hessian at the estimate.
    Observed,
    /// Inverse of the expected Fisher information.
    Expected,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long, value_enum, default_value_t = VcovArg::Observed)]
    pub vcov: VcovArg,
    /// Confidence level of the Wald intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
}

impl FitArgs {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.max_iterations,
            vcov: match self.vcov {
                VcovArg::Observed => VcovSource::ObservedHessian,
                VcovArg::Expected => VcovSource::ExpectedInformation,
            },
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Coefficient {
    pub submodel: Submodel,
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Serialize)]
pub struct LrSummary {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Serialize)]
pub struct EstimatesReport {
    pub response: String,
    pub n: usize,
    pub mean_link: Link,
    pub precision_link: Link,
    pub converged: bool,
    pub iterations: usize,
    pub vcov_source: VcovSource,
    pub confidence_level: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub coefficients: Vec<Coefficient>,
    /// Test of constant precision, present when precision covariates are used.
    pub precision_lr_test: Option<LrSummary>,
    pub trace: Vec<IterationRecord>,
}

pub fn estimates_report(
    m: &FittedModel,
    data: &Dataset,
    response: &str,
    level: f64,
    options: &FitOptions,
) -> CliResult<EstimatesReport> {
    let se = m.standard_errors();
    let ci = m.confidence_intervals(level)?;
    let theta = m.theta();
    let names = data.mean_names.iter().map(|n| (Submodel::Mean, n)).chain(
        data.precision_names
            .iter()
            .map(|n| (Submodel::Precision, n)),
    );
    let mut coefficients = Vec::new();
    for (j, (submodel, term)) in names.enumerate() {
        let z = theta[j] / se[j];
        coefficients.push(Coefficient {
            submodel,
            term: term.clone(),
            estimate: theta[j],
            std_error: se[j],
            z_value: z,
            p_value: 2.0 * std_normal_cdf(-z.abs())?,
            lower: ci[j].lower,
            upper: ci[j].upper,
        });
    }
    let spec = m.spec();
    Ok(EstimatesReport {
        response: response.to_string(),
        n: spec.n(),
        mean_link: spec.mean_link(),
        precision_link: spec.precision_link(),
        converged: m.converged,
        iterations: m.iterations,
        vcov_source: m.vcov_source,
        confidence_level: level,
        loglik: m.loglik,
        aic: m.aic(),
        bic: m.bic(),
        coefficients,
        precision_lr_test: precision_lr(m, options),
        trace: m.trace.clone(),
    })
}

fn precision_lr(m: &FittedModel, options: &FitOptions) -> Option<LrSummary> {
    let spec = m.spec();
    if spec.q() < 2 {
        return None;
    }
    let (mean_link, precision_link) = (spec.mean_link(), spec.precision_link());
    let ones = DMatrix::from_element(spec.n(), 1, 1.0);
    let reduced = ModelSpec::new(
        spec.y().clone(),
        spec.x().clone(),
        ones,
        mean_link,
        precision_link,
    )
    .and_then(|r| {
        fit(
            &r,
            &FitOptions {
                start: None,
                ..options.clone()
            },
        )
    })
    .and_then(|r| lr_test_precision(m, &r));
    match reduced {
        Ok(t) => Some(LrSummary {
            statistic: t.statistic,
            df: t.df,
            p_value: t.p_value,
        }),
        Err(e) => {
            eprintln!(
                "warning: constant-precision model could not be fitted ({e}); LR test omitted"
            );
            None
        }
    }
}

pub fn fitted_rows(m: &FittedModel) -> Vec<Vec<String>> {
    let rq = quantile_residuals(m);
    let rp = pearson_residuals(m);
    (0..m.spec().n())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                num(m.spec().y()[i]),
                num(m.mu_hat[i]),
                num(m.phi_hat[i]),
                num(rq.values[i]),
                num(rp.values[i]),
            ]
        })
        .collect()
}

pub const FITTED_HEADER: [&str; 6] = [
    "i",
    "y",
    "mu_hat",
    "phi_hat",
    "quantile_residual",
    "pearson_residual",
];

pub fn run(args: &FitArgs) -> CliResult<()> {
    let data = args.run.load()?;
    let options = args.options();
    let m = fit(&data.spec, &options)?;
    let report = estimates_report(&m, &data, &args.run.response, args.level, &options)?;

    let dir = &args.run.output_dir;
    ensure_dir(dir)?;
    write_json(&dir.join("estimates.json"), &report)?;
    if args.run.format == Format::Csv {
        let rows = report.coefficients.iter().map(|c| {
            vec![
                c.submodel.to_string(),
                c.term.clone(),
                num(c.estimate),
                num(c.std_error),
                num(c.z_value),
                num(c.p_value),
                num(c.lower),
                num(c.upper),
            ]
        });
        let header = [
            "submodel",
            "term",
            "estimate",
            "std_error",
            "z_value",
            "p_value",
            "lower",
            "upper",
        ];
        write_csv(&dir.join("estimates.csv"), &header, rows)?;
    }
    write_csv(&dir.join("fitted.csv"), &FITTED_HEADER, fitted_rows(&m))?;
    print_summary(&report);
    Ok(())
}

fn print_summary(r: &EstimatesReport) {
    println!(
        "response {} (n = {}), links {}/{}, converged in {} iterations",
        r.response, r.n, r.mean_link, r.precision_link, r.iterations
    );
    println!(
        "{:<10} {:<16} {:>12} {:>12} {:>9}",
        "submodel", "term", "estimate", "std.error", "p-value"
    );
    for c in &r.coefficients {
        println!(
            "{:<10} {:<16} {:>12.6} {:>12.6} {:>9.3e}",
            c.submodel.to_string(),
            c.term,
            c.estimate,
            c.std_error,
            c.p_value
        );
    }
    println!(
        "log-likelihood {:.6}  AIC {:.4}  BIC {:.4}",
        r.loglik, r.aic, r.bic
    );
    if let Some(t) = &r.precision_lr_test {
        println!(
            "constant precision LR {:.4} on {} df, p = {:.3e}",
            t.statistic, t.df, t.p_value
        );
    }
}
