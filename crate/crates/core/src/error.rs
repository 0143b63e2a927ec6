use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid quadrature settings: {0}")]
    InvalidQuadrature(String),

    #[error("{context}: no convergence (estimate {estimate}, error {error})")]
    NonConvergence {
        context: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("closed form {closed} and quadrature {numeric} disagree")]
    QuadratureMismatch { closed: f64, numeric: f64 },

    #[error("extrapolation residual {residual} exceeds {bound}")]
    IllConditioned { residual: f64, bound: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::QuadratureMismatch { .. } | Error::IllConditioned { .. }
        )
    }
}

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
