use std::fmt;
use std::path::{Path, PathBuf};

/// Usage problems exit with 1, data problems with 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data {
        path: Option<PathBuf>,
        source: cochceps::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
        }
    }

    pub fn data(path: &Path, message: impl Into<String>) -> Self {
        CliError::Data {
            path: Some(path.to_path_buf()),
            source: cochceps::Error::InvalidConfig(message.into()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data { path: Some(p), source } => write!(f, "{}: {source}", p.display()),
            CliError::Data { path: None, source } => write!(f, "{source}"),
        }
    }
}

impl From<cochceps::Error> for CliError {
    fn from(source: cochceps::Error) -> Self {
        CliError::Data { path: None, source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the offending file to a library error.
pub trait At<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> At<T> for cochceps::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|source| CliError::Data {
            path: Some(path.to_path_buf()),
            source,
        })
    }
}

impl<T> At<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::Data {
            path: Some(path.to_path_buf()),
            source: e.into(),
        })
    }
}
