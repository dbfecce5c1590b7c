use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A state component became NaN or infinite.
    #[error("numeric blow-up{}: component `{component}` is not finite", at_time(.t))]
    NumericBlowup {
        t: Option<f64>,
        component: &'static str,
    },

    /// A scenario value violates its documented constraint.
    #[error("invalid scenario value `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
}

fn at_time(t: &Option<f64>) -> String {
    t.map(|t| format!(" at t = {t:.6} s")).unwrap_or_default()
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
