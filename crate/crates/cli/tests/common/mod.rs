#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// The bundled synthetic dataset: columns y, x (mean) and z (precision).
pub fn bundled_csv() -> PathBuf {
    crate_dir().join("data").join("synthetic.csv")
}

pub fn golden_estimates() -> PathBuf {
    crate_dir()
        .join("tests")
        .join("golden")
        .join("estimates.json")
}

pub fn schema(name: &str) -> PathBuf {
    crate_dir()
        .join("schema")
        .join(format!("{name}.schema.json"))
}

pub fn bpreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// `bpreg fit|diagnose` on the bundled data with both covariates.
pub fn on_bundled(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let csv = bundled_csv();
    let mut args = vec![
        sub,
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--mean-terms",
        "x",
        "--precision-terms",
        "z",
        "--output-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    bpreg(&args)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file as string fields, after checking the header.
pub fn read_csv(path: &Path, header: &[&str]) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let h: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(h, header, "{}", path.display());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

pub fn assert_valid(instance_path: &Path, schema_name: &str) {
    let schema = read_json(&schema(schema_name));
    let instance = read_json(instance_path);
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(&instance)
        .map(|e| e.to_string())
        .collect();
    assert!(
        errors.is_empty(),
        "{} against {schema_name}: {errors:?}",
        instance_path.display()
    );
}
