use thiserror::Error;

/// Errors raised by the numerical and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParam { name: &'static str, msg: String },

    #[error("quadrature did not converge on [{lo}, {hi}]: estimated error {err:e} > tolerance {tol:e}")]
    Quadrature { lo: f64, hi: f64, err: f64, tol: f64 },

    #[error("tridiagonal eigensolver failed to converge after {iterations} sweeps; diag={diag:?} offdiag={offdiag:?}")]
    NoConvergence {
        iterations: usize,
        diag: Vec<f64>,
        offdiag: Vec<f64>,
    },

    #[error("measure mismatch: {0}")]
    MeasureMismatch(String),

    #[error("bounded-Lipschitz problem too large: {atoms} atoms exceeds cap {cap}")]
    TooManyAtoms { atoms: usize, cap: usize },

    #[error("branch ambiguity: z = {re} + {im}i lies on the cut [0, {edge}]")]
    BranchCut { re: f64, im: f64, edge: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        func,
        msg: msg.into(),
    }
}

pub(crate) fn invalid(name: &'static str, msg: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        msg: msg.into(),
    }
}
