//! Command-line front end for the stochastic pilot-wave simulator: config
//! parsing, experiment execution, and deterministic output bundles.

pub mod commands;
pub mod config;
pub mod output;

/// CLI failure modes, mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 1).
    Validation(Vec<String>),
    /// I/O or simulation failure (exit 2).
    Runtime(String),
    /// A requested statistical check failed its gate (exit 3).
    Stats(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Stats(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(errs) => {
                writeln!(f, "configuration invalid:")?;
                for e in errs {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
            CliError::Runtime(e) => write!(f, "runtime failure: {e}"),
            CliError::Stats(e) => write!(f, "statistical check failed: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dualist_core::CoreError> for CliError {
    fn from(e: dualist_core::CoreError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
