use thiserror::Error;

/// Errors raised by the model formulas, the integrator and the experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain where a closed form is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called with inputs that violate its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The integrator produced a non-finite state or lost the spin constraint.
    #[error("integration unstable at t = {t}: {reason}")]
    Instability { t: f64, reason: String },

    /// |v| reached the configured fraction of the speed of light.
    #[error("velocity ceiling exceeded at t = {t}: |v|/c = {ratio}")]
    VelocityCeiling { t: f64, ratio: f64 },

    /// The data do not determine the requested fit.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Level extraction requires a strictly increasing phase integral.
    #[error("phase integral is not monotone near E = {energy}")]
    NonMonotone { energy: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical method itself (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Instability { .. } | Error::VelocityCeiling { .. } | Error::NonMonotone { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
