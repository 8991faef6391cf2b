use thiserror::Error;

/// Errors raised by the simulation core and the protocol layers built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown register segment `{0}`")]
    UnknownSegment(String),

    #[error("duplicate register segment `{0}`")]
    DuplicateSegment(String),

    #[error("register layouts do not match: {0}")]
    LayoutMismatch(String),

    #[error("qubit budget exceeded: {required} qubits requested, maximum is {max}")]
    QubitBudget { required: usize, max: usize },

    #[error("operator is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("measurement branch has vanishing probability {prob:.3e}")]
    ImpossibleOutcome { prob: f64 },

    #[error("function domain of {bits} bits exceeds the limit of {max}")]
    DomainTooLarge { bits: usize, max: usize },

    #[error("public key component {0} was already consumed")]
    ConsumedKey(u8),

    #[error("oracle query budget of {0} exhausted")]
    QueryBudgetExceeded(usize),

    #[error("dense dimension budget exceeded: dim {dim} > {max}")]
    DimensionBudget { dim: usize, max: usize },

    #[error("ill-conditioned eigenproblem (residual {residual:.3e})")]
    IllConditioned { residual: f64 },

    #[error("eigenvalue spread precondition violated: eigenvalue {eigenvalue} not within {eps} of {q}")]
    SpreadViolated { eigenvalue: f64, q: f64, eps: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
