use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice parameters (a = {a}, b = {b}): {reason}")]
    InvalidParams { a: f64, b: f64, reason: String },

    #[error("singular basis (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e}){}", k_suffix(.k_index))]
    NoConvergence {
        iterations: usize,
        residual: f64,
        k_index: Option<usize>,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("root bracketing failed: {0}")]
    RootBracketingFailed(String),

    #[error("empty gap (alpha = {alpha}, beta = {beta})")]
    EmptyGap { alpha: f64, beta: f64 },

    #[error("SDP solver stalled after {iterations} iterations (gap {gap:e}, primal {primal_infeas:e}, dual {dual_infeas:e})")]
    SolverStall {
        iterations: usize,
        gap: f64,
        primal_infeas: f64,
        dual_infeas: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn k_suffix(k: &Option<usize>) -> String {
    match k {
        Some(i) => format!(" at k-point {i}"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the index of the k-point at which an eigensolve failed.
    pub fn at_k(self, idx: usize) -> Self {
        match self {
            Error::NoConvergence {
                iterations,
                residual,
                ..
            } => Error::NoConvergence {
                iterations,
                residual,
                k_index: Some(idx),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
