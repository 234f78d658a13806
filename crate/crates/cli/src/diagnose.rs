use bpreg::diagnostics::{
    local_influence, perturbation_matrix, simulated_envelope, EnvelopeOptions, InfluenceSubset,
    PerturbationScheme,
};
use bpreg::fit;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::data::{Dataset, RunConfig};
use crate::error::{CliError, CliResult};
use crate::fit::{fitted_rows, FITTED_HEADER};
use crate::output::{ensure_dir, num, write_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    CaseWeights,
    Response,
    MeanCovariate,
    PrecisionCovariate,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    Theta,
    Beta,
    Nu,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long, value_enum, default_value_t = SchemeArg::CaseWeights)]
    pub scheme: SchemeArg,
    /// Column perturbed by the covariate schemes.
    #[arg(long)]
    pub covariate: Option<String>,
    /// Parameters whose displacement defines the curvature.
    #[arg(long, value_enum, default_value_t = SubsetArg::Theta)]
    pub subset: SubsetArg,
    /// Simulated samples for the residual envelope (at least 19).
    #[arg(long, default_value_t = 100)]
    pub envelope_reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub band_level: f64,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsReport {
    pub scheme: String,
    pub covariate: Option<String>,
    pub subset: String,
    pub n: usize,
    pub c_max: f64,
    pub threshold: f64,
    /// 1-based indices with C_i above the threshold.
    pub flagged: Vec<usize>,
    pub envelope_replicates: usize,
    pub envelope_failed: usize,
    pub envelope_band_level: f64,
    pub envelope_coverage: f64,
}

fn position(names: &[String], name: &str, submodel: &str) -> CliResult<usize> {
    names
        .iter()
        .skip(1)
        .position(|n| n == name)
        .map(|j| j + 1)
        .ok_or_else(|| CliError::Usage(format!("covariate '{name}' is not a {submodel} term")))
}

pub fn scheme(args: &DiagnoseArgs, data: &Dataset) -> CliResult<PerturbationScheme> {
    let needs_covariate = !matches!(args.scheme, SchemeArg::CaseWeights | SchemeArg::Response);
    let name = match (&args.covariate, needs_covariate) {
        (None, true) => {
            return Err(CliError::Usage(format!(
                "--scheme {} requires --covariate",
                args.scheme.to_possible_value().unwrap().get_name()
            )))
        }
        (Some(c), false) => {
            return Err(CliError::Usage(format!(
                "--covariate {c} has no effect with --scheme {}",
                args.scheme.to_possible_value().unwrap().get_name()
            )))
        }
        (name, _) => name.as_deref().unwrap_or(""),
    };
    Ok(match args.scheme {
        SchemeArg::CaseWeights => PerturbationScheme::CaseWeights,
        SchemeArg::Response => PerturbationScheme::Response,
        SchemeArg::MeanCovariate => PerturbationScheme::MeanCovariate {
            t: position(&data.mean_names, name, "mean")?,
            scale: None,
        },
        SchemeArg::PrecisionCovariate => PerturbationScheme::PrecisionCovariate {
            k: position(&data.precision_names, name, "precision")?,
            scale: None,
        },
        SchemeArg::Simultaneous => PerturbationScheme::Simultaneous {
            t: position(&data.mean_names, name, "mean")?,
            k: position(&data.precision_names, name, "precision")?,
            scale: None,
        },
    })
}

pub fn run(args: &DiagnoseArgs) -> CliResult<()> {
    let data = args.run.load()?;
    let scheme = scheme(args, &data)?;
    let m = fit(&data.spec, &bpreg::FitOptions::default())?;
    let subset = match args.subset {
        SubsetArg::Theta => InfluenceSubset::Theta,
        SubsetArg::Beta => InfluenceSubset::BetaOnly,
        SubsetArg::Nu => InfluenceSubset::NuOnly,
    };
    let delta = perturbation_matrix(&m, &scheme)?;
    let infl = local_influence(&m, &delta, subset)?;
    let env = simulated_envelope(
        &m,
        &EnvelopeOptions {
            replicates: args.envelope_reps,
            band_level: args.band_level,
            seed: args.run.seed,
        },
    )?;

    let dir = &args.run.output_dir;
    ensure_dir(dir)?;
    let flagged = infl.flagged();
    let rows = (0..m.spec().n()).map(|i| {
        vec![
            (i + 1).to_string(),
            num(infl.c_indices[i]),
            (infl.c_indices[i] > infl.threshold).to_string(),
            num(infl.l_max[i]),
        ]
    });
    write_csv(
        &dir.join("influence.csv"),
        &["i", "c_i", "flagged", "l_max"],
        rows,
    )?;

    let rows = (0..env.sorted_residuals.len()).map(|r| {
        vec![
            (r + 1).to_string(),
            num(env.theoretical[r]),
            num(env.sorted_residuals[r]),
            num(env.lower[r]),
            num(env.median[r]),
            num(env.upper[r]),
        ]
    });
    let header = [
        "rank",
        "theoretical",
        "residual",
        "lower",
        "median",
        "upper",
    ];
    write_csv(&dir.join("envelope.csv"), &header, rows)?;
    write_csv(&dir.join("residuals.csv"), &FITTED_HEADER, fitted_rows(&m))?;

    let report = DiagnosticsReport {
        scheme: args
            .scheme
            .to_possible_value()
            .unwrap()
            .get_name()
            .to_string(),
        covariate: args.covariate.clone(),
        subset: args
            .subset
            .to_possible_value()
            .unwrap()
            .get_name()
            .to_string(),
        n: m.spec().n(),
        c_max: infl.c_max,
        threshold: infl.threshold,
        flagged: flagged.iter().map(|i| i + 1).collect(),
        envelope_replicates: env.replicates,
        envelope_failed: env.failed,
        envelope_band_level: env.band_level,
        envelope_coverage: env.coverage(),
    };
    write_json(&dir.join("diagnostics.json"), &report)?;

    let outside = env.sorted_residuals.len() as f64 * (1.0 - report.envelope_coverage);
    println!(
        "{} of {} observations flagged (C_i > {:.4}); C_max = {:.4}",
        flagged.len(),
        report.n,
        report.threshold,
        report.c_max
    );
    println!(
        "envelope from {} refits: {:.0} sorted residuals outside the {:.0}% bands",
        env.replicates,
        outside,
        100.0 * env.band_level
    );
    Ok(())
}
