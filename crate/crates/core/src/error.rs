use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pump half-frequency lies outside the CROW band: cos(k0 D) would be {0}")]
    OutOfBand(f64),

    /// Invalid configuration; carries the offending key and, when parsed
    /// from text, the 1-based line number.
    #[error("{}", fmt_config(.key, .line, .msg))]
    Config {
        key: String,
        line: Option<usize>,
        msg: String,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("series has no peak: {0}")]
    NoPeak(String),

    #[error("Fock truncation n_max = {n_max} too small: last-level population {leakage:.3e}")]
    InsufficientTruncation { n_max: usize, leakage: f64 },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_config(key: &str, line: &Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("config error at line {l}, key `{key}`: {msg}"),
        None => format!("config error, key `{key}`: {msg}"),
    }
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            line: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caught by input validation (CLI exit status 2).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Domain(_) | Error::OutOfBand(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
