use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated its domain constraint.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("unknown preset `{name}` (available: {})", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("malformed override `{0}`, expected key=value")]
    MalformedOverride(String),

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than the runtime environment.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
