use std::fmt;
use std::process::ExitCode;

/// A failed command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit 2.
    Validation(String),
    /// Integration, root finding or I/O failure; exit 3.
    Numerical(String),
    /// The reader closed standard output; exit 0 quietly.
    BrokenPipe,
}

impl CliError {
    pub fn field(name: &str, err: impl fmt::Display) -> Self {
        CliError::Validation(format!("{name}: {err}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::BrokenPipe => ExitCode::SUCCESS,
        }
    }

    /// Maps a library error raised while handling `field`.
    pub fn from_core(field: &str, err: isoflow::Error) -> Self {
        use isoflow::Error as E;
        match err {
            E::InvalidRootSystem(_)
            | E::MultiplicityRule { .. }
            | E::DimensionMismatch { .. }
            | E::OutsideChamber { .. }
            | E::OutsideSector { .. }
            | E::InvalidParameter { .. }
            | E::Parse { .. } => CliError::field(field, err),
            other => CliError::Numerical(format!("{field}: {other}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::BrokenPipe => write!(f, "broken pipe"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::BrokenPipe;
        }
        CliError::Numerical(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if let csv::ErrorKind::Io(io) = e.kind() {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return CliError::BrokenPipe;
            }
        }
        CliError::Numerical(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe) {
            return CliError::BrokenPipe;
        }
        CliError::Numerical(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
