use std::path::PathBuf;

use hetrecip_core::embedding::EmbeddingError;
use hetrecip_core::equilibrium::EquilibriumError;
use hetrecip_core::io::IoError;
use hetrecip_core::mbi::MbiError;
use hetrecip_core::model::ParamError;
use hetrecip_core::sim::SimError;
use hetrecip_core::tail::TailError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("line {line} column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line} column {column}: {message}")]
    UnknownKey { line: usize, column: usize, message: String },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Equilibrium(#[from] EquilibriumError),
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Mbi(#[from] MbiError),
    #[error("{0}")]
    Embedding(#[from] EmbeddingError),
    #[error("{0}")]
    Tail(#[from] TailError),
    #[error("{0}")]
    Data(#[from] IoError),
    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn from_json(e: serde_json::Error) -> Self {
        let (line, column) = (e.line(), e.column());
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep the bare message
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        if message.starts_with("unknown field") {
            CliError::UnknownKey { line, column, message }
        } else {
            CliError::Parse { line, column, message }
        }
    }

    /// Stable name printed first on the diagnostic line.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigRead { .. } => "ConfigRead",
            CliError::Parse { .. } => "ParseError",
            CliError::UnknownKey { .. } => "UnknownKey",
            CliError::Param(p) => p.kind(),
            CliError::InvalidConfig(_) => "InvalidConfig",
            CliError::Equilibrium(EquilibriumError::NoConvergence { .. }) => "NoConvergence",
            CliError::Equilibrium(EquilibriumError::NonPositiveH(_)) => "NonPositiveH",
            CliError::Sim(_) => "ResourceLimit",
            CliError::Mbi(MbiError::EventBudgetExceeded { .. }) => "EventBudgetExceeded",
            CliError::Mbi(MbiError::RegularityNotMet) => "RegularityNotMet",
            CliError::Embedding(EmbeddingError::ChainTooLong(_)) => "ChainTooLong",
            CliError::Embedding(EmbeddingError::EnumerationTooLarge(_)) => "EnumerationTooLarge",
            CliError::Tail(t) | CliError::Data(IoError::Data(t)) => tail_kind(t),
            CliError::Data(_) => "ParseError",
            CliError::Write { .. } => "WriteError",
            CliError::Runtime(_) => "RuntimeError",
        }
    }

    /// 2 for anything wrong with the configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigRead { .. }
            | CliError::Parse { .. }
            | CliError::UnknownKey { .. }
            | CliError::Param(_)
            | CliError::InvalidConfig(_) => 2,
            _ => 1,
        }
    }

    /// Single line, `error: <Kind>: <details>`.
    pub fn diagnostic(&self) -> String {
        let body = self.to_string();
        let kind = self.kind();
        let mut s = if body == kind || (body.starts_with(kind) && body[kind.len()..].starts_with(':')) {
            format!("error: {body}")
        } else {
            format!("error: {kind}: {body}")
        };
        s.retain(|c| c != '\n' && c != '\r');
        s
    }
}

fn tail_kind(e: &TailError) -> &'static str {
    match e {
        TailError::InsufficientData { .. } => "InsufficientData",
        TailError::NonPositiveValues { .. } => "NonPositiveValues",
        TailError::DegenerateTail => "DegenerateTail",
        TailError::EmptySelection { .. } => "EmptySelection",
        TailError::ConditionsUnmet(_) => "ConditionsUnmet",
        TailError::GridMismatch(..) => "GridMismatch",
        TailError::EmptyDataset => "EmptyDataset",
        TailError::BadDimensions { .. } => "BadDimensions",
    }
}
