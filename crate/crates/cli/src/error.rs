use std::path::Path;

/// Errors surfaced by the command-line tool, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid flags or grids. Exit code 1.
    #[error("usage: {0}")]
    Usage(String),
    /// Unreadable or malformed input. Exit code 2.
    #[error("{0}")]
    Data(String),
    /// Numerically degenerate input. Exit code 3.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }

    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        }
    }

    /// Reclassifies a core error caused by flag values as a usage error.
    pub fn from_grid(e: mbar_core::Error) -> Self {
        if e.is_degenerate() {
            CliError::Degenerate(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<mbar_core::Error> for CliError {
    fn from(e: mbar_core::Error) -> Self {
        if e.is_degenerate() {
            CliError::Degenerate(e.to_string())
        } else if matches!(e, mbar_core::Error::InvalidConfig(_) | mbar_core::Error::InvalidBounds(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
