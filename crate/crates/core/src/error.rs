//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Cholesky pivot fell below the positivity threshold.
    #[error("matrix is not positive definite: pivot {index} is {value:.6e} (threshold {threshold:.6e})")]
    NotSpd {
        index: usize,
        value: f64,
        threshold: f64,
    },

    /// Power iteration ran out of iterations before the Rayleigh quotient settled.
    #[error("power iteration did not converge after {iterations} iterations; last estimate {last_estimate}")]
    NoConvergence {
        iterations: usize,
        last_estimate: f64,
    },

    /// A dense-matrix operation was asked for a dimension above the cap.
    #[error("dimension {d} exceeds the dense-matrix cap {cap}")]
    SizeCap { d: usize, cap: usize },

    /// The block size does not divide the dimension.
    #[error("block size {s} does not divide dimension {d}")]
    Divisibility { d: usize, s: usize },

    /// A bounded linear scan hit its cap without finding a solution.
    #[error("scan exhausted: no s <= {cap} satisfies the bound (regime is extreme, not a bug)")]
    ScanExhausted { cap: u64 },

    /// Bad grid or CLI configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// I/O failure, with the offending path.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for configuration and I/O problems,
    /// 2 for numerical/domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
