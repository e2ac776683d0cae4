//! Error taxonomy shared by every module of the engine.

use thiserror::Error;

/// Which tail of a bilateral series failed to converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// The one-sided (or upper, `n -> +inf`) tail.
    Upper,
    /// The `n -> -inf` tail of a bilateral series.
    Lower,
}

impl std::fmt::Display for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tail::Upper => write!(f, "upper tail"),
            Tail::Lower => write!(f, "lower tail"),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("theta function evaluated at zero argument")]
    ZeroArgument,

    #[error("{tail} not certified within {max_terms} terms")]
    NonConvergent { tail: Tail, max_terms: usize },

    #[error("denominator parameter hit an exact zero at term {term}")]
    DivergentParameter { term: usize },

    #[error("sigma requires Re(a) > 0; violated after word prefix {prefix:?}")]
    BranchViolation { prefix: Vec<crate::awcore::Involution> },

    #[error("evaluation at a pole: {0}")]
    PoleAtNode(String),

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("negative or non-real radicand {0:e} in K constant")]
    NegativeRadicand(f64),

    #[error("pole within {0:e} of the integration contour")]
    PoleNearContour(f64),

    #[error("independent evaluation routes disagree: rel err {relerr:e} > {tol:e}")]
    RouteDisagreement { relerr: f64, tol: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<V> = std::result::Result<V, Error>;

impl Error {
    /// Short machine-readable tag used in verification reports.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::ZeroArgument => "ZeroArgument",
            Error::NonConvergent { .. } => "NonConvergent",
            Error::DivergentParameter { .. } => "DivergentParameter",
            Error::BranchViolation { .. } => "BranchViolation",
            Error::PoleAtNode(_) => "PoleAtNode",
            Error::DegenerateDenominator(_) => "DegenerateDenominator",
            Error::DegenerateParameters(_) => "DegenerateParameters",
            Error::NegativeRadicand(_) => "NegativeRadicand",
            Error::PoleNearContour(_) => "PoleNearContour",
            Error::RouteDisagreement { .. } => "RouteDisagreement",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
