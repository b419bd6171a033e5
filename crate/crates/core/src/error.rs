use thiserror::Error;

pub type Result<T> = std::result::Result<T, QfiError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QfiError {
    #[error("matrix is not Hermitian: max |A - A^dagger| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("Kraus completeness violated: max |sum E^dagger E - I| = {defect:e}")]
    Completeness { defect: f64 },

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("degenerate eigenvalues at theta = {theta:?}: separation {separation:e}")]
    Degeneracy { theta: Vec<f64>, separation: f64 },

    #[error("theta = {theta:?} (with stencil half-width {reach:e}) is outside the domain {domain:?}")]
    OutOfDomain {
        theta: Vec<f64>,
        reach: f64,
        domain: Vec<(f64, f64)>,
    },

    #[error("operation requires a {required} channel")]
    WrongForm { required: &'static str },

    #[error("unknown channel family `{0}`")]
    UnknownFamily(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("inconsistent results: {what} ({left:e} vs {right:e})")]
    Consistency {
        what: &'static str,
        left: f64,
        right: f64,
    },

    #[error("singular Fisher term: outcome {outcome} has p = {probability:e} but dp = {derivative:e}")]
    SingularFisher {
        outcome: usize,
        probability: f64,
        derivative: f64,
    },

    #[error("likelihood is -inf over the whole search domain")]
    ImpossibleCounts,
}

impl QfiError {
    /// True for numeric failures (degeneracy, singular terms, broken identities)
    /// as opposed to invalid user input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            QfiError::Degeneracy { .. }
                | QfiError::SingularFisher { .. }
                | QfiError::Consistency { .. }
                | QfiError::ImpossibleCounts
        )
    }
}
