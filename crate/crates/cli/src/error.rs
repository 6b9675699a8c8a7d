use std::fmt;

use plsagg_core::Error;

/// Process exit codes.
pub mod exit {
    pub const CONFIG: u8 = 2;
    pub const BUDGET: u8 = 3;
    pub const NON_CONVERGENCE: u8 = 4;
    pub const IO: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: exit::CONFIG, kind: "config", message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: exit::IO, kind: "io", message: message.into() }
    }

    /// One line for standard error: `error code=<n> kind=<kind> message=<quoted>`.
    pub fn line(&self) -> String {
        format!("error code={} kind={} message={:?}", self.code, self.kind, self.message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (code, kind) = match e.root() {
            Error::Budget { .. } => (exit::BUDGET, "budget"),
            Error::NonConvergence { .. } => (exit::NON_CONVERGENCE, "non_convergence"),
            Error::Io(_) => (exit::IO, "io"),
            Error::Csv(c) if c.is_io_error() => (exit::IO, "io"),
            Error::Csv(_) | Error::Parse(_) => (exit::CONFIG, "parse"),
            _ => (exit::CONFIG, "config"),
        };
        Self { code, kind, message }
    }
}
