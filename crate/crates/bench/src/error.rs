use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] cyclecast::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid experiment: {0}")]
    Experiment(String),

    #[error("model artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Short machine-readable category for CLI error lines.
    pub fn kind(&self) -> &'static str {
        use cyclecast::Error as E;
        match self {
            BenchError::Core(e) => match e {
                E::InvalidParameters(_) => "invalid_parameters",
                E::InvalidInput(_) => "invalid_input",
                E::Domain(_) => "domain",
                E::Simulation { .. } => "simulation",
                E::Generation(_) => "generation",
                E::Ingestion { .. } => "ingestion",
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::Singular(_) => "singular",
                E::Training(_) => "training",
                E::Init(_) => "init",
                E::Io(_) => "io",
                E::Csv(_) => "csv",
            },
            BenchError::Config(_) => "config",
            BenchError::Experiment(_) => "experiment",
            BenchError::Artifact(_) => "artifact",
            BenchError::Io(_) => "io",
            BenchError::Csv(_) => "csv",
            BenchError::Json(_) => "json",
        }
    }
}
