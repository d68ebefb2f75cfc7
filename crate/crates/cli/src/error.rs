//! Error type carrying the documented process exit codes:
//! 0 success, 1 usage, 2 data error, 3 config error.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Config(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<skymine::knowledge::KbError> for CliError {
    fn from(err: skymine::knowledge::KbError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<skymine::mining::ConfigError> for CliError {
    fn from(err: skymine::mining::ConfigError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<skymine::library::LibraryError> for CliError {
    fn from(err: skymine::library::LibraryError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<skymine::facts::FactFileError> for CliError {
    fn from(err: skymine::facts::FactFileError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<skymine::skyline::SkylineError> for CliError {
    fn from(err: skymine::skyline::SkylineError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}
