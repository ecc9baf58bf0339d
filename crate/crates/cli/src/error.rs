use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration (exit 3).
    Config(String),
    /// An optimization or convergence check fell short (exit 2).
    NotConverged(String),
    /// Anything else (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Runtime(_) => ExitCode::from(1),
            CliError::NotConverged(_) => ExitCode::from(2),
            CliError::Config(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::NotConverged(msg) => write!(f, "not converged: {msg}"),
            CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl From<hyperqubit::Error> for CliError {
    fn from(e: hyperqubit::Error) -> Self {
        use hyperqubit::Error::*;
        match e {
            InvalidParameter(_) | UnknownGate(_) | SchemaVersion { .. } => CliError::Config(e.to_string()),
            MissingPulse(gate) => {
                CliError::Runtime(format!("missing pulse for `{gate}`; run `synthesize {gate}` first"))
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
