use std::path::{Path, PathBuf};

use motifcar_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("gradient check failed: {0}")]
    Gradcheck(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

/// Broad failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Numeric => 3,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Data => "data",
            Kind::Numeric => "numeric",
        }
    }
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Outermost stage name, looking through core stage wrappers too.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            Error::Core(e) => e.stage(),
            _ => None,
        }
    }

    /// Message of the innermost error, without stage prefixes.
    pub fn detail(&self) -> String {
        match self {
            Error::Stage { source, .. } => source.detail(),
            Error::Core(e) => e.root().to_string(),
            e => e.to_string(),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Error::Usage(_) => Kind::Usage,
            Error::Io { .. } | Error::Format { .. } => Kind::Data,
            Error::Gradcheck(_) => Kind::Numeric,
            Error::Stage { source, .. } => source.kind(),
            Error::Core(e) => match e.root() {
                CoreError::Argument(_) | CoreError::Config(_) => Kind::Usage,
                CoreError::NonFinite { .. } => Kind::Numeric,
                _ => Kind::Data,
            },
        }
    }
}
