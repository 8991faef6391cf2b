//! Command-line experiment runner: config parsing, the experiment registry and
//! report output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{apply_env, parse_config, Command, Experiment, ExperimentConfig, Params};
pub use error::{CliError, EXIT_BUDGET, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
pub use experiments::run;
pub use report::{ExperimentReport, SCHEMA_VERSION};

/// Runs the experiment and writes the JSON report to `--out` (stdout when
/// unset) and the per-trial rows to `--csv`.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let report = run(config)?;
    match &config.out_path {
        Some(path) => report.write_json(path)?,
        None => println!("{}", report.to_json()),
    }
    if let Some(path) = &config.csv_path {
        report.write_csv(path)?;
    }
    Ok(report)
}

/// One line per experiment, for `--list`.
pub fn list_text() -> String {
    Experiment::ALL
        .iter()
        .map(|e| format!("{:<18} {}\n", e.name(), e.description()))
        .collect()
}
