use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("model: {0}")]
    Model(String),

    #[error("thermodynamics: {0}")]
    Thermo(String),

    #[error("monte carlo: {0}")]
    MonteCarlo(String),

    #[error("boundary tracking: {0}")]
    Tracking(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
