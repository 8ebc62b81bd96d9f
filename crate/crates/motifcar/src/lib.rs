//! File formats, TOML configuration, the pipeline driver and the command
//! line for [`motifcar_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod run;
pub mod store;
pub mod tu;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use run::run_pipeline;
