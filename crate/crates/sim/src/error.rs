use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] cfmimo_core::Error),
    #[error("drop {drop}: {source}")]
    Drop {
        drop: u64,
        #[source]
        source: cfmimo_core::Error,
    },
    #[error("no CSI mode requested")]
    NoModes,
    #[error("thread count must be at least 1")]
    Threads,
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("unknown mode `{0}` (expected statistical, beamforming_training or perfect)")]
    UnknownMode(String),
    #[error("no samples for mode {0}")]
    NoSamples(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }
}
