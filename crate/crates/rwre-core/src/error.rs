use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} is out of range (available: {available})")]
    OutOfRange { index: u64, available: u64 },
    #[error("oracle size {n} exceeds the cap of {cap}")]
    OracleTooLarge { n: usize, cap: usize },
    #[error("value exceeds the representable range")]
    RangeExceeded,
    #[error("environment exhausted at time {time} (level {level})")]
    EnvironmentExhausted { time: u64, level: u64 },
    #[error("fit needs at least {needed} usable checkpoints, found {found}")]
    InsufficientCheckpoints { needed: usize, found: usize },
    #[error("horizon {n} is too short for this check (minimum {min})")]
    HorizonTooShort { n: u64, min: u64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
