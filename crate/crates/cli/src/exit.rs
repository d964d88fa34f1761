//! Failure categories and their process exit codes.

use std::fmt;

use disk_formation::scenario::{ScenarioError, ScenarioErrorKind};

pub const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  1  unexpected internal error
  2  invalid command line
  3  scenario file could not be parsed or failed validation
  4  infeasible scenario (target distance ≤ 2r, or overlapping initial disks)
  5  integration halted (step underflow or non-finite state); partial output is kept
  6  target constraints cannot be realized in the plane
  7  file system error
  8  malformed trace file";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Internal,
    Usage,
    Scenario,
    Infeasible,
    Halted,
    Realization,
    Io,
    Trace,
}

impl Failure {
    pub fn code(self) -> i32 {
        match self {
            Failure::Internal => 1,
            Failure::Usage => 2,
            Failure::Scenario => 3,
            Failure::Infeasible => 4,
            Failure::Halted => 5,
            Failure::Realization => 6,
            Failure::Io => 7,
            Failure::Trace => 8,
        }
    }

    /// Short name used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Failure::Internal => "internal",
            Failure::Usage => "usage",
            Failure::Scenario => "scenario",
            Failure::Infeasible => "infeasible",
            Failure::Halted => "halted",
            Failure::Realization => "realization",
            Failure::Io => "io",
            Failure::Trace => "trace",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub failure: Failure,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(failure: Failure, error: impl Into<anyhow::Error>) -> Self {
        Self {
            failure,
            error: error.into(),
        }
    }

    pub fn msg(failure: Failure, message: impl fmt::Display) -> Self {
        Self::new(failure, anyhow::anyhow!("{message}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let failure = match e.kind {
            ScenarioErrorKind::InfeasibleTarget | ScenarioErrorKind::InfeasibleInitial => {
                Failure::Infeasible
            }
            ScenarioErrorKind::Parse | ScenarioErrorKind::Invalid => Failure::Scenario,
        };
        CliError::new(failure, e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Wraps file system errors with the path involved.
pub fn io<T>(result: std::io::Result<T>, what: impl fmt::Display) -> CliResult<T> {
    result.map_err(|e| CliError::new(Failure::Io, anyhow::Error::new(e).context(what.to_string())))
}
