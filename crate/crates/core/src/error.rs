use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subordinator excluded: sigma = 0 requires drift_d > 0 (got {drift_d})")]
    Subordinator { drift_d: f64 },

    #[error("invalid phase-type distribution: {0}")]
    InvalidPhaseType(String),

    #[error("{name} must be positive (got {value})")]
    NonpositiveRate { name: &'static str, value: f64 },

    #[error("resolvent (sI - T) is numerically singular at s = {re} + {im}i")]
    SingularResolvent { re: f64, im: f64 },

    #[error("roots of psi(s) = q are not distinct (separation {separation:e} below {threshold:e})")]
    RepeatedRoot { separation: f64, threshold: f64 },

    #[error("root classification failed: {0}")]
    RootCount(String),

    #[error("scale function overflow: Phi(q) * x = {0} exceeds 700")]
    Overflow(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate denominator g = {0:e}")]
    DegenerateDenominator(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("bracketing failed: {0}")]
    Bracket(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Input and validation problems, as opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Subordinator { .. }
                | Error::InvalidPhaseType(_)
                | Error::NonpositiveRate { .. }
                | Error::Domain(_)
                | Error::Config(_)
                | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
