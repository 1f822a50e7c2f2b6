use std::fmt;

use brownian_scenery::error::Error;
use serde_json::json;

/// Everything that ends a run early, with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration.
    Config(String),
    Core(Error),
    /// A checked property failed.
    Property { failed: Vec<String> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Property { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::NoConvergence { .. } | Error::Infeasible { .. } | Error::NonMonotone { .. } | Error::GridTooNarrow { .. } => 3,
                _ => 2,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Property { .. } => "property",
            CliError::Core(e) => match e {
                Error::InvalidLaw(_) => "invalid_law",
                Error::InvalidArgument(_) => "invalid_argument",
                Error::Capacity { .. } => "capacity",
                Error::OutOfRange { .. } => "out_of_range",
                Error::WalkExited { .. } => "walk_exited",
                Error::GridMismatch(_) => "grid_mismatch",
                Error::Resolution { .. } => "resolution",
                Error::Unnormalized { .. } => "unnormalized",
                Error::NoConvergence { .. } => "no_convergence",
                Error::Partition { .. } => "partition",
                Error::Infeasible { .. } => "infeasible",
                Error::NonMonotone { .. } => "non_monotone",
                Error::GridTooNarrow { .. } => "grid_too_narrow",
                Error::Format(_) => "format",
                Error::Io(_) => "io",
                Error::Json(_) => "json",
            },
        }
    }

    /// The machine-readable report printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Property { failed } = self {
            v["failed"] = json!(failed);
        }
        v
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Property { failed } => write!(f, "failed: {}", failed.join(", ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(Error::Format(e.to_string()))
    }
}

pub type CliResult<T> = Result<T, CliError>;
