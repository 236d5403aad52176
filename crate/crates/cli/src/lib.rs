//! Command-line front end for `drivetherm`: configuration, subcommands and
//! CSV output.

use std::fmt;

pub mod commands;
pub mod config;
pub mod csv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONVERGENCE: i32 = 2;
pub const EXIT_TRUNCATION: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<drivetherm::Error> for CliError {
    fn from(e: drivetherm::Error) -> Self {
        use drivetherm::Error as E;
        let code = match &e {
            E::NumericalFailure(_) | E::ConvergenceFailure { .. } | E::AmbiguousSteadyState { .. } | E::Stiffness(_) => {
                EXIT_CONVERGENCE
            }
            E::Truncation { .. } => EXIT_TRUNCATION,
            E::InternalConsistency { .. } => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}
