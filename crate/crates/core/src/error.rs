use thiserror::Error;

/// Errors raised by the operator algebra, the Lax and Darboux engines, and
/// the scenario runner.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix data has {found} entries, expected {expected}")]
    BadShape { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("operator is not Hermitian (gap {gap:.3e})")]
    NotHermitian { gap: f64 },

    #[error("non-finite entries encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("matrix exponential overflows (norm {norm:.3e})")]
    Overflow { norm: f64 },

    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence { method: &'static str, iterations: usize },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("no eigenvector to tolerance for eigenvalue z = {re} + {im}i (residual {residual:.3e})")]
    Defective { re: f64, im: f64, residual: f64 },

    #[error("zero vector where a Lax solution is required")]
    ZeroVector,

    #[error("singular Darboux transformation: |<chi|phi>| = {overlap:.3e}{}", at_time(*t))]
    SingularDarboux { overlap: f64, t: Option<f64> },

    #[error("inconsistent Lax data: two forms of the dressed solution differ by {form_gap:.3e}")]
    InconsistentLax { form_gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {what} (value {value:.3e}, tolerance {tolerance:.3e})")]
    InvariantViolation { what: String, value: f64, tolerance: f64 },

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("trace is zero after shifting; the solution cannot be normalized")]
    Unnormalizable,
}

fn at_time(t: Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
