use std::fmt::Display;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Solver,
}

/// Failure tagged with the pipeline stage that produced it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(stage: &'static str, e: impl Display) -> Self {
        Self::new(ErrorKind::Config, stage, e)
    }

    pub fn data(stage: &'static str, e: impl Display) -> Self {
        Self::new(ErrorKind::Data, stage, e)
    }

    pub fn solver(stage: &'static str, e: impl Display) -> Self {
        Self::new(ErrorKind::Solver, stage, e)
    }

    fn new(kind: ErrorKind, stage: &'static str, e: impl Display) -> Self {
        Self {
            kind,
            stage,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Solver => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
