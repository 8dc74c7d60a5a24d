use thiserror::Error;

/// Errors raised by the solver and its setup stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate family at point {point}: kernel integral is zero")]
    DegenerateFamily { point: usize },

    #[error("inverted deformation (det F = {det:e}) at point {point}, bond to {neighbor}")]
    InvertedBond {
        point: usize,
        neighbor: usize,
        det: f64,
    },

    #[error("non-finite value in {field} at point {point} (step {step})")]
    NonFinite {
        field: &'static str,
        point: usize,
        step: usize,
    },

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
