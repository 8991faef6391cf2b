use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("budget exceeded: {0}")]
    Budget(qrewind::Error),
    #[error("simulation failed: {0}")]
    Sim(qrewind::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<qrewind::Error> for CliError {
    fn from(e: qrewind::Error) -> Self {
        use qrewind::Error as E;
        match e {
            E::QubitBudget { .. } | E::DimensionBudget { .. } | E::DomainTooLarge { .. } => {
                CliError::Budget(e)
            }
            E::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Sim(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Clap(_) => EXIT_USAGE,
            CliError::Budget(_) => EXIT_BUDGET,
            _ => EXIT_FAIL,
        }
    }
}
