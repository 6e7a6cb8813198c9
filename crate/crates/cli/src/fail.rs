//! Process-level error classification. Every failure a command can hit maps
//! to one of three exit codes (plus 0 for success):
//!
//! * 1 — an invariant the tool verifies does not hold (the interesting case);
//! * 2 — the invocation or configuration is wrong;
//! * 3 — an I/O or file-format problem.

use std::fmt;

#[derive(Debug)]
pub enum Failure {
    /// A checked physical/numerical invariant failed.
    Invariant(String),
    /// Bad flags or configuration; nothing was computed.
    Config(String),
    /// Filesystem or file-format trouble.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Failure::Invariant(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Failure::Io(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invariant(msg) => write!(f, "invariant failure: {msg}"),
            Failure::Config(msg) => write!(f, "config error: {msg}"),
            Failure::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<diffstack::Error> for Failure {
    fn from(e: diffstack::Error) -> Self {
        use diffstack::Error as E;
        match e {
            E::Io(inner) => Failure::Io(inner.to_string()),
            E::Format(msg) => Failure::Io(msg),
            E::InvalidParameter(_)
            | E::DimensionCap { .. }
            | E::EmptyDataset
            | E::LabelOutOfRange { .. } => Failure::Config(e.to_string()),
            other => Failure::Invariant(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Attach a path to a raw I/O error so diagnostics name the file.
pub fn io_at(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}
