use std::fmt;

use hitting_core::Error;

/// Exit codes: 1 usage/config, 2 assertion failure, 3 numerical failure.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub const USAGE: i32 = 1;
    pub const ASSERTION: i32 = 2;
    pub const NUMERICAL: i32 = 3;

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            message: message.into(),
        }
    }

    pub fn assertion(message: impl Into<String>) -> Self {
        Self {
            code: Self::ASSERTION,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroPhi { .. } | Error::PhaseJump { .. } | Error::ImaginaryResidue(_) => Self::NUMERICAL,
            _ => Self::USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o: {e}"))
    }
}
