use thiserror::Error;

/// Errors produced across the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("projection is singular: point lies on the camera plane")]
    ProjectionSingular,
    #[error("disparity point maps to a point at infinity")]
    PointAtInfinity,
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    #[error("particle prediction degenerated: fewer than two particles mapped to finite points")]
    DegeneratePrediction,
    #[error("target left the field of view: {0} particles survived truncation")]
    TargetLeftFov(usize),
    #[error("sensor particle weights failed to normalise")]
    NormalisationFailure,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
