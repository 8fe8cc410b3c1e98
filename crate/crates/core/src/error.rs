use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An environment value is outside its physical range.
    #[error("invalid environment: {field} = {value} ({reason})")]
    InvalidEnvironment {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Conductivity is zero or negative, so the channel model is undefined.
    #[error("invalid channel: conductivity {conductivity} S/m must be > 0")]
    InvalidChannel { conductivity: f64 },

    #[error("invalid delivery model: {0}")]
    InvalidDeliveryModel(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid configuration: {field} {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("cluster count k = {k} out of range 1..={n}")]
    ClusterCount { k: usize, n: usize },

    #[error("run {run} failed: {source}")]
    RunFailed {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Name of the offending input field, when the error has one.
    pub fn field(&self) -> Option<String> {
        match self {
            Error::InvalidEnvironment { field, .. } => Some((*field).to_string()),
            Error::InvalidChannel { .. } => Some("conductivity".into()),
            Error::InvalidDeliveryModel(_) => Some("delivery".into()),
            Error::InvalidConfig { field, .. } => Some(field.clone()),
            Error::ClusterCount { .. } => Some("kmeans.k".into()),
            Error::RunFailed { source, .. } => source.field(),
            Error::InvalidTopology(_) | Error::Serialization(_) => None,
        }
    }

    /// Short machine-readable tag for error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidEnvironment { .. } => "invalid_environment",
            Error::InvalidChannel { .. } => "invalid_channel",
            Error::InvalidDeliveryModel(_) => "invalid_delivery_model",
            Error::InvalidTopology(_) => "invalid_topology",
            Error::InvalidConfig { .. } => "invalid_config",
            Error::ClusterCount { .. } => "cluster_count",
            Error::RunFailed { .. } => "run_failed",
            Error::Serialization(_) => "serialization",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
