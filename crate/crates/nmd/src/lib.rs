//! File formats, report writers and the command-line driver for
//! [`nmd_core`].

pub mod cli;
pub mod format;
pub mod output;
pub mod pipeline;

use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const RESONANCE: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    /// Malformed file, bad option or unusable path.
    Input(String),
    Core(nmd_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => exit::INPUT,
            CliError::Core(e) if e.is_input() => exit::INPUT,
            CliError::Core(e) if e.is_resonance() => exit::RESONANCE,
            CliError::Core(_) => exit::NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nmd_core::Error> for CliError {
    fn from(e: nmd_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
