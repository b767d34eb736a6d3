use std::fmt;

use serde_json::json;

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: "InvalidArgument".into(),
            message: message.into(),
            code: 2,
        }
    }

    pub fn io(err: std::io::Error) -> Self {
        Self {
            kind: "Io".into(),
            message: err.to_string(),
            code: 1,
        }
    }

    pub fn not_converged(message: impl Into<String>) -> Self {
        Self {
            kind: "NotConverged".into(),
            message: message.into(),
            code: 3,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind, "message": self.message, "exit_code": self.code }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<catability::Error> for CliError {
    fn from(err: catability::Error) -> Self {
        use catability::Error as E;
        let code = match &err {
            E::OptimizerDidNotConverge { .. } => 3,
            E::Io(_) | E::CorruptTableFile(_) | E::BenchmarkUnavailable(_) => 1,
            _ => 2,
        };
        Self {
            kind: err.kind().into(),
            message: err.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::io(err)
    }
}
