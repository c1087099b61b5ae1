use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected width {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid tensor shape {shape:?} for {len} elements")]
    TensorShape { shape: Vec<usize>, len: usize },

    #[error("class index {index} out of range for {num_classes} classes")]
    Index { index: usize, num_classes: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model parse error at layer {layer}: {message}")]
    LayerParse { layer: usize, message: String },

    #[error("model parse error: {0}")]
    ModelParse(String),

    #[error("dataset error at row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for CLI use: 2 for configuration problems, 3 for
    /// everything that stems from the data or model files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) => 2,
            _ => 3,
        }
    }
}
