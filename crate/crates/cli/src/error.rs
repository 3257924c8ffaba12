use std::fmt;

use refdyn::asc::{AscError, ScenarioError, TaxError};
use refdyn::baselines::BaselineError;
use refdyn::estimate::EstimateError;
use refdyn::logfile::LogFileError;
use refdyn::report::ReportError;
use refdyn::schedule::ScheduleError;
use refdyn::sim::SimError;
use refdyn::stats::StatError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameter values.
    Usage(String),
    /// Unreadable, malformed or inconsistent input, or unwritable output.
    Data(String),
    /// A check on our own output failed.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "internal invariant breached: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! usage_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        }
    )*};
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

usage_errors!(ScheduleError, SimError, BaselineError);
data_errors!(LogFileError, ScenarioError, EstimateError, StatError, ReportError, TaxError);

impl From<AscError> for CliError {
    fn from(e: AscError) -> Self {
        match e {
            AscError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
