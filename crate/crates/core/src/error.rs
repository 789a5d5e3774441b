use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("qubit {0} used more than once")]
    DuplicateQubit(usize),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("observable is not Hermitian (phase {0})")]
    NonHermitian(String),

    #[error("invalid probabilities: {0}")]
    InvalidProbability(String),

    /// A projection or forced measurement outcome has vanishing weight.
    #[error("projection onto an orthogonal subspace (probability {0:e})")]
    OrthogonalSubspace(f64),

    /// A code-space renormalization was requested with ⟨Π⟩ too small to divide by.
    #[error("degenerate projection: ⟨Π⟩ = {0:e}")]
    DegenerateProjection(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
