use std::path::PathBuf;

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),

    #[error("point {0:?} is outside the Branin domain")]
    OutOfDomain(Vec<f64>),

    #[error(transparent)]
    Core(#[from] gpcs_core::Error),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
