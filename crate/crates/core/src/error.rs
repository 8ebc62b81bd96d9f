use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("producer: {0}")]
    Producer(String),
    #[error("initialization: {0}")]
    Init(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("non-finite {component} at step {step}")]
    NonFinite {
        step: usize,
        component: &'static str,
    },
    #[error("classifier: {0}")]
    Classifier(String),
    #[error("split leakage: {0}")]
    Leakage(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Name of the outermost stage, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
