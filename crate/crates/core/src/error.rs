use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("interpolation step {step} m is not within (0, {length}] m")]
    StepExceedsSegment { step: f64, length: f64 },
    #[error("polyline has no vertices")]
    EmptyPolyline,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("user id must not be empty")]
    EmptyUserId,
    #[error("trace of user {0} has no records")]
    EmptyTrace(String),
    #[error("trace of user {user} is not in chronological order at index {index}")]
    Unordered { user: String, index: usize },
    #[error("record of user {found} inserted into trace of user {expected}")]
    ForeignRecord { expected: String, found: String },
    #[error("dataset already contains a trace for user {0}")]
    DuplicateUser(String),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot open file")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("expected header `user,timestamp,lat,lon`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{name} must be {requirement}, got {value}")]
    Invalid {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

impl ConfigError {
    pub(crate) fn check(
        ok: bool,
        name: &'static str,
        requirement: &'static str,
        value: f64,
    ) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Invalid {
                name,
                requirement,
                value,
            })
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("protected dataset contains user {0} absent from the original")]
    UnknownUser(String),
    #[error("original dataset is empty")]
    EmptyOriginal,
    #[error("protected dataset is empty")]
    EmptyProtected,
    #[error("query {index} has no result on the original dataset")]
    ZeroQuery { index: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
