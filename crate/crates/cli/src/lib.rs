//! Library side of the `krein` command: instance/report formats, analysis,
//! generation and the verification suite.

pub mod analysis;
pub mod commands;
pub mod error;
pub mod format;
pub mod gen;
pub mod verify;

pub use error::CliError;
