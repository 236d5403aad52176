use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hamiltonian is not Hermitian (defect {defect:.3e})")]
    InvalidHamiltonian { defect: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("steady state did not converge (residual {residual:.3e})")]
    ConvergenceFailure { residual: f64 },

    #[error("steady state is not unique: null space dimension {null_dim}")]
    AmbiguousSteadyState { null_dim: String },

    #[error("integrator step underflow: {0}")]
    Stiffness(String),

    #[error("Hilbert space too large: dimension {dim} exceeds cap {cap} ({entries} superoperator rows)")]
    DimensionOverflow { dim: usize, cap: usize, entries: usize },

    #[error("Fock truncation insufficient: tail mass {tail:.3e} in top {levels} levels")]
    Truncation { tail: f64, levels: usize },

    #[error("internal consistency violated for {what}: {a:.12e} vs {b:.12e}")]
    InternalConsistency { what: String, a: f64, b: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}
