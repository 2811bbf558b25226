use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] gopt_core::Error),

    #[error("level {level} ({steps} steps, {intervals} intervals): {source}")]
    Level {
        level: usize,
        steps: usize,
        intervals: usize,
        source: gopt_core::Error,
    },

    #[error("reference solve: {0}")]
    Reference(gopt_core::Error),

    #[error("ladder: {0}")]
    Ladder(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("writing output: {0}")]
    Write(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }

    fn numerics(&self) -> Option<&gopt_core::Error> {
        match self {
            Error::Numerics(e) | Error::Reference(e) => Some(e),
            Error::Level { source, .. } => Some(source),
            _ => None,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        use gopt_core::Error as E;
        if let Some(e) = self.numerics() {
            return match e {
                E::Mesh(_) => "mesh",
                E::Divergence { .. } | E::PicardNotConverged { .. } | E::SingularSystem { .. } => {
                    "numerical"
                }
                E::InvalidParameter { .. } | E::NonFinite(_) => "invalid",
                _ => "domain",
            };
        }
        match self {
            Error::Ladder(_) | Error::ConfigInvalid { .. } => "invalid",
            Error::ConfigParse(_) => "parse",
            Error::Read { .. } | Error::Write(_) => "io",
            _ => "domain",
        }
    }

    /// Process exit status for this error. Usage errors from the argument
    /// parser exit with 2.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "parse" => 3,
            "invalid" => 4,
            "mesh" => 5,
            "numerical" => 6,
            "io" => 7,
            _ => 8,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}
