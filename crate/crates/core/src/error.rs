use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// Dirichlet parameter below one makes the log-prior nonconcave.
    #[error("nonconcave-prior: alpha[{topic}] = {alpha} < 1")]
    NonconcavePrior { topic: usize, alpha: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("infeasible-region: caps sum to {cap_sum} < 1")]
    InfeasibleRegion { cap_sum: f64 },

    #[error("parse error at {}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("bounds error at {}:{line}: {message}", path.display())]
    Bounds {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("format error in {}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("unsupported-version: {found} (expected {expected})")]
    UnsupportedVersion { found: String, expected: u32 },

    #[error("validation failed: {}", violations_summary(.0))]
    Validation(Vec<Violation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn violations_summary(v: &[Violation]) -> String {
    let parts: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    if v.len() > 5 {
        format!("{} (+{} more)", parts.join("; "), v.len() - 5)
    } else {
        parts.join("; ")
    }
}
