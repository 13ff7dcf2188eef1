//! Shell-side error type. Every failure is reduced to a single diagnostic
//! line so the binary can print it and exit; the core library keeps its own
//! structured errors and they are stringified on the way through.

use std::fmt;

#[derive(Debug)]
pub struct ShellError(pub String);

impl ShellError {
    pub fn new(msg: impl Into<String>) -> Self {
        ShellError(msg.into())
    }
}

impl fmt::Display for ShellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ShellError {}

impl From<sawfilt_core::Error> for ShellError {
    fn from(e: sawfilt_core::Error) -> Self {
        ShellError(e.to_string())
    }
}

impl From<std::io::Error> for ShellError {
    fn from(e: std::io::Error) -> Self {
        ShellError(e.to_string())
    }
}

impl From<serde_json::Error> for ShellError {
    fn from(e: serde_json::Error) -> Self {
        ShellError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ShellError>;

/// Attaches a file or operation context to an error message.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T, E: fmt::Display> Context<T> for std::result::Result<T, E> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| ShellError(format!("{what}: {e}")))
    }
}
