use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::Serialize;

use crate::error::CliError;

/// Seed used when neither the file nor the flags set one.
pub const DEFAULT_SEED: u64 = 7;

/// Environment variable overriding the simulator's qubit budget.
pub const MAX_QUBITS_ENV: &str = "QREWIND_MAX_QUBITS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QpkeCorrectness,
    CcaSmoke,
    O2hCheck,
    RewindBench,
    PrsSuccessProb,
    PrsAttack,
    QpkeAttack,
    BasisCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::QpkeCorrectness,
        Experiment::CcaSmoke,
        Experiment::O2hCheck,
        Experiment::RewindBench,
        Experiment::PrsSuccessProb,
        Experiment::PrsAttack,
        Experiment::QpkeAttack,
        Experiment::BasisCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::QpkeCorrectness => "qpke-correctness",
            Experiment::CcaSmoke => "cca-smoke",
            Experiment::O2hCheck => "o2h-check",
            Experiment::RewindBench => "rewind-bench",
            Experiment::PrsSuccessProb => "prs-success-prob",
            Experiment::PrsAttack => "prs-attack",
            Experiment::QpkeAttack => "qpke-attack",
            Experiment::BasisCheck => "basis-check",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::QpkeCorrectness => "decryption success and PRF range collisions over fresh keys",
            Experiment::CcaSmoke => "CCA game mechanics with scripted and guessing adversaries",
            Experiment::O2hCheck => "one-way-to-hiding inequality across oracle adversary families",
            Experiment::RewindBench => "rewind iteration counts, output fidelity and eigenvalue-spread sweep",
            Experiment::PrsSuccessProb => "exact success probability of the key-guessing unitary, two ways",
            Experiment::PrsAttack => "final-state sweep and end-to-end distinguishing advantage",
            Experiment::QpkeAttack => "key recovery from public-key copies and challenge decryption",
            Experiment::BasisCheck => "spectral decomposition of P and branch orthonormality",
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown experiment `{s}` (see --list)")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Experiment parameters; `None` falls back to the experiment's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Params {
    pub trials: Option<usize>,
    pub lambda: Option<usize>,
    pub out_bits: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub m_dist: Option<usize>,
    pub keys: Option<usize>,
    pub q: Option<f64>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub tau: Option<f64>,
    pub depth: Option<usize>,
    pub copies: Option<usize>,
    pub queries: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: Params,
    pub seed: u64,
    pub out_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self {
            experiment,
            params: Params::default(),
            seed,
            out_path: None,
            csv_path: None,
        }
    }
}

#[derive(Parser, Debug, Default)]
#[command(
    name = "qrewind",
    version,
    about = "Run a seeded simulation experiment and emit a JSON report",
    after_help = "Flags override values from --config. Exit codes: 0 pass, 1 fail, 2 usage error, 3 qubit budget exceeded.\n\
                  Set QREWIND_MAX_QUBITS to change the qubit budget (default 24)."
)]
pub struct Cli {
    /// Experiment to run (see --list)
    #[arg(long)]
    pub experiment: Option<String>,
    /// Master seed [default: 7]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials, games or instances [default: per experiment]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-trial rows as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Flat key=value file; keys are the long flag names
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// List experiments and exit
    #[arg(long)]
    pub list: bool,
    /// Security parameter / oracle domain bits [default: 4 qpke-correctness, 3 cca-smoke, 4 o2h-check, 2 qpke-attack]
    #[arg(long)]
    pub lambda: Option<usize>,
    /// PRF or oracle output bits [default: 3·lambda; lambda for qpke-attack; 2 for o2h-check]
    #[arg(long)]
    pub out_bits: Option<usize>,
    /// State qubits per copy [default: 3 prs-attack; sweep 1..=4 prs-success-prob; sweep 2..=4 basis-check]
    #[arg(long)]
    pub n: Option<usize>,
    /// Copies consumed by key recovery [default: 3 prs-attack, 2 qpke-attack; sweep 1..=2 prs-success-prob]
    #[arg(long)]
    pub m: Option<usize>,
    /// Copies consumed by the distinguisher [default: m]
    #[arg(long)]
    pub m_dist: Option<usize>,
    /// Family size, a power of two [default: 8 prs-attack, 16 prs-success-prob]
    #[arg(long)]
    pub keys: Option<usize>,
    /// Target eigenvalue for rewind-bench [default: sweep 1/2, 1/4, 1/8]
    #[arg(long)]
    pub q: Option<f64>,
    /// Largest eigenvalue spread in the rewind-bench sweep [default: 1e-3]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Rewind iteration cap [default: 100000 rewind-bench, 200 attacks]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Distinguisher accept-fraction threshold [default: 0.9]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Query depth for o2h-check [default: 3]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Public-key copies for cca-smoke / o2h-check [default: 2]
    #[arg(long)]
    pub copies: Option<usize>,
    /// Decryption-query budget for cca-smoke / o2h-check [default: 8 / 2]
    #[arg(long)]
    pub queries: Option<usize>,
}

/// What the command line asks for.
#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    List,
    Run(Box<ExperimentConfig>),
}

/// Parses `argv` (program name first), merging an optional config file
/// underneath the flags.
pub fn parse_config<I, T>(argv: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    if cli.list {
        return Ok(Command::List);
    }
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        raw = RawConfig::from_file(path)?;
    }
    raw.overlay(&cli);
    raw.resolve().map(|c| Command::Run(Box::new(c)))
}

/// Unresolved key/value view shared by the file and the flags.
#[derive(Default, Debug)]
struct RawConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    params: Params,
}

impl RawConfig {
    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut raw = RawConfig::default();
        let mut seen = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            if seen.insert(key.clone(), i + 1).is_some() {
                return Err(CliError::Usage(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    i + 1
                )));
            }
            raw.set(&key, value).map_err(|msg| {
                CliError::Usage(format!("{}:{}: {msg}", path.display(), i + 1))
            })?;
        }
        Ok(raw)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<Option<T>, String> {
            v.parse()
                .map(Some)
                .map_err(|_| format!("`{key}` expects a number, got `{v}`"))
        }
        let p = &mut self.params;
        match key {
            "experiment" => self.experiment = Some(value.to_string()),
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "csv" => self.csv = Some(PathBuf::from(value)),
            "trials" => p.trials = num(key, value)?,
            "lambda" => p.lambda = num(key, value)?,
            "out_bits" => p.out_bits = num(key, value)?,
            "n" => p.n = num(key, value)?,
            "m" => p.m = num(key, value)?,
            "m_dist" => p.m_dist = num(key, value)?,
            "keys" => p.keys = num(key, value)?,
            "q" => p.q = num(key, value)?,
            "eps" => p.eps = num(key, value)?,
            "max_iter" => p.max_iter = num(key, value)?,
            "tau" => p.tau = num(key, value)?,
            "depth" => p.depth = num(key, value)?,
            "copies" => p.copies = num(key, value)?,
            "queries" => p.queries = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn overlay(&mut self, cli: &Cli) {
        fn over<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        over(&mut self.experiment, &cli.experiment);
        over(&mut self.seed, &cli.seed);
        over(&mut self.out, &cli.out);
        over(&mut self.csv, &cli.csv);
        let p = &mut self.params;
        over(&mut p.trials, &cli.trials);
        over(&mut p.lambda, &cli.lambda);
        over(&mut p.out_bits, &cli.out_bits);
        over(&mut p.n, &cli.n);
        over(&mut p.m, &cli.m);
        over(&mut p.m_dist, &cli.m_dist);
        over(&mut p.keys, &cli.keys);
        over(&mut p.q, &cli.q);
        over(&mut p.eps, &cli.eps);
        over(&mut p.max_iter, &cli.max_iter);
        over(&mut p.tau, &cli.tau);
        over(&mut p.depth, &cli.depth);
        over(&mut p.copies, &cli.copies);
        over(&mut p.queries, &cli.queries);
    }

    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let name = self
            .experiment
            .ok_or_else(|| CliError::Usage("missing --experiment (see --list)".into()))?;
        Ok(ExperimentConfig {
            experiment: name.parse()?,
            params: self.params,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            out_path: self.out,
            csv_path: self.csv,
        })
    }
}

/// Applies the qubit-budget override from the environment, if set.
pub fn apply_env() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(MAX_QUBITS_ENV) {
        let max: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{MAX_QUBITS_ENV} must be an integer, got `{v}`")))?;
        qrewind::statevector::set_max_qubits(max);
    }
    Ok(())
}
