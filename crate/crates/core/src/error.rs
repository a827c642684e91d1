use thiserror::Error;

/// Errors raised anywhere in the simulation and estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample is constant (zero variance)")]
    ConstantSample,

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexError { index: usize, dim: usize },

    #[error("no observation exceeds the threshold")]
    NoExceedances,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("argmax of the implied T vector is tied at components {0} and {1}")]
    TieError(usize, usize),

    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("case 1 subset of observed differences is empty")]
    EmptySubset,

    #[error("rejection budget of {0} candidates exceeded for a single acceptance")]
    RejectBudgetExceeded(usize),

    #[error("acceptance weight {0} exceeds 1")]
    DominationViolated(f64),

    #[error("numerical integration failed: {0}")]
    IntegrationFailure(String),

    #[error("GPD tail fit needs at least 30 exceedances, got {0}")]
    InsufficientTail(usize),

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("dimension mismatch: {0}")]
    DimensionError(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short variant name, used by the CLI when reporting data errors.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ConstantSample => "ConstantSample",
            Error::NonConvergence(_) => "NonConvergence",
            Error::DomainError(_) => "DomainError",
            Error::IndexError { .. } => "IndexError",
            Error::NoExceedances => "NoExceedances",
            Error::InsufficientData(_) => "InsufficientData",
            Error::TieError(..) => "TieError",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::EmptySubset => "EmptySubset",
            Error::RejectBudgetExceeded(_) => "RejectBudgetExceeded",
            Error::DominationViolated(_) => "DominationViolated",
            Error::IntegrationFailure(_) => "IntegrationFailure",
            Error::InsufficientTail(_) => "InsufficientTail",
            Error::SingularDesign => "SingularDesign",
            Error::DimensionError(_) => "DimensionError",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Stage { source, .. } => source.name(),
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::Parse(_) => "Parse",
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Extension for tagging results with a pipeline stage.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
