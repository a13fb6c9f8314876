use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used to pick CLI exit codes and error prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Domain,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Domain => "domain",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Domain => 3,
            ErrorCategory::Numerical => 4,
            ErrorCategory::Io => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the region where the operation is defined.
    #[error("{0}")]
    Domain(String),

    #[error("no sign change of H11 - H22 on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("coupling H12 is zero; no dimensionless form exists")]
    SingularReduction,

    #[error("non-finite amplitude at s = {s}")]
    Divergence { s: f64 },

    #[error("step refinement did not reach tolerance {tolerance:e} after {halvings} halvings (last change {last_change:e})")]
    NotConverged {
        tolerance: f64,
        halvings: u32,
        last_change: f64,
    },

    #[error("integration needs {required} RK4 steps, budget is {budget}")]
    StepBudget { required: u64, budget: u64 },

    #[error("need at least {needed} samples in the averaging window, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Malformed batch or figure request (e.g. nothing to run).
    #[error("{0}")]
    Spec(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Domain(_)
            | Error::Bracket { .. }
            | Error::SingularReduction
            | Error::StepBudget { .. }
            | Error::InsufficientData { .. } => ErrorCategory::Domain,
            Error::Divergence { .. } | Error::NotConverged { .. } => ErrorCategory::Numerical,
            Error::Spec(_) => ErrorCategory::Usage,
            Error::Io { .. } => ErrorCategory::Io,
        }
    }
}
