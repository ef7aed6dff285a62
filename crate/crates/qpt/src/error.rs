use thiserror::Error;

pub type Result<T, E = QptError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QptError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] optomech_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}
