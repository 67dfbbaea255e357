use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the numerical kernels and the analyses built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("{context}: matrix is not Hurwitz (largest real part of spectrum {max_real:e})")]
    NotHurwitz { context: &'static str, max_real: f64 },

    #[error("{context}: matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { context: &'static str, asymmetry: f64 },

    #[error("{context}: matrix is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPsd { context: &'static str, eigenvalue: f64 },

    #[error("{stage} did not converge")]
    Convergence { stage: &'static str },

    #[error("{what}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("{what}: argument {value} outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("s = {s} is a pole of the transfer function")]
    Pole { s: Complex64 },

    #[error(
        "gamma_{index} is numerically singular (min/max eigenvalue ratio {ratio:e}); \
         the controllability chain (A,B), (A,PC^T), (A,gamma_j rho_j) breaks at j = {index}"
    )]
    ControllabilityChain { index: usize, ratio: f64 },

    #[error("internal consistency check failed for {what}: relative gap {gap:e}")]
    InternalConsistency { what: &'static str, gap: f64 },

    #[error(
        "cost shape coefficient phi_{order} = {value} is negative; the weighted cascade needs \
         nonnegative coefficients, use the series evaluation instead"
    )]
    ShapeNotSos { order: usize, value: f64 },

    #[error("adaptive quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("cumulant order {order} is not supported (maximum 3)")]
    UnsupportedOrder { order: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("failed to parse system file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numeric,
    Verification,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Dimension { .. }
            | Error::Domain { .. }
            | Error::Input(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::UnsupportedOrder { .. }
            | Error::Resource(_)
            | Error::ShapeNotSos { .. }
            | Error::NotSymmetric { .. }
            | Error::NotHurwitz { .. } => ErrorKind::Input,
            Error::InternalConsistency { .. } => ErrorKind::Verification,
            _ => ErrorKind::Numeric,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: impl fmt::Display, found: impl fmt::Display) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
