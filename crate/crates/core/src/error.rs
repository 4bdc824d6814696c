use thiserror::Error;

use crate::hilbert::{Mode, TruncationWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation window [{n_min}..{n_max}]")]
    InvalidWindow { n_min: u64, n_max: u64 },

    /// The requested initial field does not fit in the truncation window.
    /// `suggested` is a window that would hold it.
    #[error("window {window} too small for mode {mode}: {reason} (try {suggested})")]
    WindowTooSmall {
        mode: Mode,
        window: TruncationWindow,
        reason: String,
        suggested: TruncationWindow,
    },

    #[error("state and operator live on different bases")]
    BasisMismatch,

    #[error("basis dimension {dimension} exceeds the dense limit {limit}")]
    DimensionTooLarge { dimension: usize, limit: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{path}{}: {message}", location(*.line, .key.as_deref()))]
    Parse {
        path: String,
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn location(line: Option<usize>, key: Option<&str>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(":{l} (key `{k}`)"),
        (Some(l), None) => format!(":{l}"),
        (None, Some(k)) => format!(" (key `{k}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), message: err.to_string() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
