//! Process exit codes and the error type that carries them.

use std::fmt;

use hetro_core::Error;

pub const OK: u8 = 0;
/// `verify-moments` found an exact identity outside its band.
pub const VERIFY_FAILED: u8 = 1;
pub const DATA: u8 = 2;
pub const INAPPLICABLE: u8 = 3;
pub const USAGE: u8 = 4;
pub const INTERNAL: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(INTERNAL, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotApplicable(_) => INAPPLICABLE,
            Error::UnknownTable(_) | Error::InvalidArgument(_) => USAGE,
            Error::DimensionMismatch(_)
            | Error::RankDeficient { .. }
            | Error::DegenerateResidual { .. }
            | Error::InvalidDof(_)
            | Error::InvalidShape(_)
            | Error::InfeasibleScenario(_)
            | Error::NonFinite(_)
            | Error::Io(_)
            | Error::Parse(_) => DATA,
        };
        CliError::new(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&std::path::Path>) -> CliResult<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::new(DATA, format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::internal(format!("stdout: {e}")))
        }
    }
}
