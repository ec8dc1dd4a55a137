use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid roof function: {0}")]
    InvalidRoof(String),

    #[error("operation requires a linear map, but a sheared map was given")]
    ShearNotSupported,

    #[error("sheared map has no verified cone certificate; certify it before running experiments")]
    Uncertified,

    #[error("periodic-point enumeration needs cap >= {required}, configured cap is {cap}")]
    EnumerationCapExceeded { required: u128, cap: u128 },

    #[error("grid coverage {coverage:.4} is below the required {required:.4}")]
    InsufficientCoverage { coverage: f64, required: f64 },

    #[error("observable is not a member of the certified class: {0}")]
    NotAMember(String),

    #[error("no periodic obstruction found up to period {0}; rigidity witness is undefined")]
    NoObstruction(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
