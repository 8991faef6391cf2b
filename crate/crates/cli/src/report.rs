use std::collections::BTreeMap;
use std::path::Path;

use qrewind::stats::Interval;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    /// Resolved parameters, defaults included.
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub rng: &'static str,
    pub trials: usize,
    pub metrics: BTreeMap<String, f64>,
    pub ci: BTreeMap<String, Interval>,
    /// Named acceptance checks; `pass` is their conjunction.
    pub checks: BTreeMap<String, bool>,
    pub tables: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub wall_time: f64,
    pub pass: bool,
    #[serde(skip)]
    pub rows: Vec<Value>,
}

/// Everything that must reproduce bit-for-bit under a fixed config.
#[derive(Serialize)]
struct MetricsBlock<'a> {
    params: &'a BTreeMap<String, Value>,
    seed: u64,
    trials: usize,
    metrics: &'a BTreeMap<String, f64>,
    ci: &'a BTreeMap<String, Interval>,
    checks: &'a BTreeMap<String, bool>,
    tables: &'a BTreeMap<String, Value>,
    pass: bool,
}

impl ExperimentReport {
    /// The report minus `wall_time`, as compact JSON.
    pub fn metrics_block(&self) -> String {
        serde_json::to_string(&MetricsBlock {
            params: &self.params,
            seed: self.seed,
            trials: self.trials,
            metrics: &self.metrics,
            ci: &self.ci,
            checks: &self.checks,
            tables: &self.tables,
            pass: self.pass,
        })
        .expect("report values serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }

    pub fn write_json(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Per-trial rows as CSV; the header is the union of row keys in
    /// first-seen order. Nested values are written as JSON.
    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut header: Vec<String> = Vec::new();
        for row in &self.rows {
            if let Value::Object(map) = row {
                for k in map.keys() {
                    if !header.contains(k) {
                        header.push(k.clone());
                    }
                }
            }
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&header)?;
        for row in &self.rows {
            let record: Vec<String> = header
                .iter()
                .map(|k| match row.get(k) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}
