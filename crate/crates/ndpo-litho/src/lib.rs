//! File-in/file-out front end to `ndpo-core`: JSON run configurations,
//! CSV/JSON outputs, parallel ensembles and the verification suite.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use error::{CliError, Result};
