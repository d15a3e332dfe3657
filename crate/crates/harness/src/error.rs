use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ConfigIssue;

/// Harness failures, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n{}", Issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("simulation failed: {0}")]
    Simulation(#[from] galton_core::Error),

    #[error("decode failed: {0}")]
    Decode(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
}

struct Issues<'a>(&'a [ConfigIssue]);

impl fmt::Display for Issues<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        HarnessError::Input {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// 2 configuration, 3 simulation or decode, 4 file access or format.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Simulation(_) | HarnessError::Decode(_) => 3,
            HarnessError::Io { .. } | HarnessError::Input { .. } => 4,
        }
    }
}
