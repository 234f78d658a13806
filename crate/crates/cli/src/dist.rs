use bpreg::distribution::MeanPrecisionParams;
use clap::{Args, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::output::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistOp {
    Pdf,
    Cdf,
    Quantile,
    Sample,
    Summary,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: f64,
    #[arg(long, value_enum)]
    pub op: DistOp,
    /// Evaluation points for pdf and cdf, probabilities for quantile.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub at: Vec<f64>,
    /// Number of draws for sample.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Output lines of the requested operation.
pub fn evaluate(args: &DistArgs) -> CliResult<Vec<String>> {
    let d = MeanPrecisionParams::new(args.mu, args.phi)?;
    let needs_points = matches!(args.op, DistOp::Pdf | DistOp::Cdf | DistOp::Quantile);
    if needs_points && args.at.is_empty() {
        return Err(CliError::Usage("this operation requires --at".into()));
    }
    let f: fn(&MeanPrecisionParams, f64) -> bpreg::Result<f64> = match args.op {
        DistOp::Pdf => MeanPrecisionParams::pdf,
        DistOp::Cdf => MeanPrecisionParams::cdf,
        DistOp::Quantile => MeanPrecisionParams::quantile,
        DistOp::Sample => return Ok(d.sample(args.n, args.seed).into_iter().map(num).collect()),
        DistOp::Summary => return Ok(summary_lines(&d)),
    };
    args.at.iter().map(|&v| Ok(num(f(&d, v)?))).collect()
}

fn summary_lines(d: &MeanPrecisionParams) -> Vec<String> {
    let s = d.summary();
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), num);
    vec![
        format!("mean {}", num(s.mean)),
        format!("variance {}", num(s.variance)),
        format!("skewness {}", opt(s.skewness)),
        format!("kurtosis {}", opt(s.kurtosis)),
        format!("mode {}", opt(s.mode)),
        format!(
            "inflection_points {}",
            s.inflection_points.map_or_else(
                || "undefined".to_string(),
                |(a, b)| format!("{} {}", num(a), num(b))
            )
        ),
    ]
}

pub fn run(args: &DistArgs) -> CliResult<()> {
    for line in evaluate(args)? {
        println!("{line}");
    }
    Ok(())
}
