use thiserror::Error;

/// Errors raised by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge at t = {t}: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature {
        t: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("invalid basis set: {0}")]
    Structure(String),

    #[error("invalid fit input: {0}")]
    FitInput(String),

    #[error("hierarchy of {count} ADOs exceeds the configured budget of {budget}")]
    Budget { count: u128, budget: u128 },

    #[error("numerical divergence at t = {time}: {detail}")]
    Divergence { time: f64, detail: String },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Divergence { .. } => 3,
            Error::Budget { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
