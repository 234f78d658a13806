use std::collections::HashSet;
use std::path::{Path, PathBuf};

use bpreg::{Link, ModelSpec};
use clap::{Args, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Data source and model configuration shared by `fit` and `diagnose`.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// CSV file with a header row.
    #[arg(long = "input", short = 'i', value_name = "CSV")]
    pub input_path: PathBuf,
    /// Response column; every value must be strictly positive.
    #[arg(long, short = 'y')]
    pub response: String,
    /// Comma-separated mean covariates. An intercept is always included.
    #[arg(long, value_delimiter = ',', value_name = "COLS")]
    pub mean_terms: Vec<String>,
    /// Comma-separated precision covariates. An intercept is always included.
    #[arg(long, value_delimiter = ',', value_name = "COLS")]
    pub precision_terms: Vec<String>,
    #[arg(long, default_value = "log")]
    pub mean_link: Link,
    #[arg(long, default_value = "log")]
    pub precision_link: Link,
    #[arg(long, short = 'o', default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// json writes JSON reports only; csv also writes their tabular form.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// The model specification together with the names of its columns.
#[derive(Debug)]
pub struct Dataset {
    pub spec: ModelSpec,
    pub mean_names: Vec<String>,
    pub precision_names: Vec<String>,
}

impl RunConfig {
    fn check_terms(&self) -> CliResult<()> {
        for (label, terms) in [
            ("mean", &self.mean_terms),
            ("precision", &self.precision_terms),
        ] {
            let mut seen = HashSet::new();
            for t in terms.iter() {
                if t == &self.response {
                    return Err(CliError::Usage(format!(
                        "response column '{t}' cannot also be a {label} term"
                    )));
                }
                if !seen.insert(t) {
                    return Err(CliError::Usage(format!(
                        "{label} term '{t}' is listed twice"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(&self) -> CliResult<Dataset> {
        self.check_terms()?;
        let table = Table::read(&self.input_path)?;
        let y = DVector::from_vec(table.column(&self.response)?);
        let x = table.design(&self.mean_terms)?;
        let z = table.design(&self.precision_terms)?;
        if let Some((row, v)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(CliError::Usage(format!(
                "response '{}' must be strictly positive (the model is defined for y > 0); data row {} has {v}",
                self.response,
                row + 1
            )));
        }
        let spec = ModelSpec::new(y, x, z, self.mean_link, self.precision_link)?;
        let names = |terms: &[String]| {
            std::iter::once(INTERCEPT.to_string())
                .chain(terms.iter().cloned())
                .collect()
        };
        Ok(Dataset {
            spec,
            mean_names: names(&self.mean_terms),
            precision_names: names(&self.precision_terms),
        })
    }
}

/// A CSV file held as strings and parsed column by column on request.
struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let parse_err = |e: csv::Error| CliError::Usage(format!("{}: {e}", path.display()));
        let headers = reader
            .headers()
            .map_err(parse_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(parse_err)?;
        if rows.is_empty() {
            return Err(CliError::Usage(format!("{}: no data rows", path.display())));
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Usage(format!(
                "column '{name}' not found in {} (columns: {})",
                self.path.display(),
                self.headers.join(", ")
            ))
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let field = r.get(j).unwrap_or("");
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "column '{name}', data row {}: '{field}' is not a finite number",
                            i + 1
                        ))
                    })
            })
            .collect()
    }

    /// Intercept column followed by the named columns.
    fn design(&self, terms: &[String]) -> CliResult<DMatrix<f64>> {
        let n = self.rows.len();
        let mut m = DMatrix::from_element(n, terms.len() + 1, 1.0);
        for (j, t) in terms.iter().enumerate() {
            m.set_column(j + 1, &DVector::from_vec(self.column(t)?));
        }
        Ok(m)
    }
}
