use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Circuit file did not parse; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A gate matrix failed the unitarity check.
    #[error("gate at line {line} is not unitary (deviation {deviation:.3e})")]
    NonUnitary { line: usize, deviation: f64 },

    /// Qubit index outside 0..n, or control == target.
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// Circuit and layout were built from different gate lists.
    #[error("layout/circuit mismatch: {0}")]
    LayoutMismatch(String),

    /// Vector or operator dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Operator built in one register representation was used in another.
    #[error("representation mismatch: expected {expected}, got {got}")]
    RepMismatch { expected: String, got: String },

    /// An operator that must be Hermitian is not.
    #[error("operator is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    /// Iterative propagation failed to meet its tolerance.
    #[error("propagation did not converge: residual {residual:.3e} > tol {tol:.3e}")]
    NonConvergence { residual: f64, tol: f64 },

    /// A parameter was outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
