use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("vertex index {index} out of range for graph with {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vertex {vertex} has zero degree; restrict to the giant weak component first")]
    ZeroDegree { vertex: usize },

    #[error("{op} did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence {
        op: &'static str,
        iterations: usize,
        best_residual: f64,
    },

    #[error("singular values {i} and {j} do not pair: |{a:.6e} - {b:.6e}| exceeds tolerance")]
    PairMismatch {
        i: usize,
        j: usize,
        a: f64,
        b: f64,
    },

    #[error("rw-normalized input is not supported here: K_rw is not normal, so the SVD/Schur relationship does not hold")]
    RwNotSupported,

    #[error("dense operation on n = {n} exceeds the dense guard ({guard})")]
    DenseGuard { n: usize, guard: usize },

    #[error("matrix is not symmetric: max asymmetry {asym:.3e} exceeds tolerance")]
    NotSymmetric { asym: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
