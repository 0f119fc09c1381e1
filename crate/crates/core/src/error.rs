use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subcarrier map: {0}")]
    InvalidMap(String),
    #[error("invalid frame configuration: {0}")]
    InvalidConfig(String),
    #[error("empty preamble support")]
    EmptyPreambleSupport,
    #[error("window [{start}, {start}+{len}) outside signal [{lo}, {hi})")]
    WindowOutOfRange {
        start: i64,
        len: usize,
        lo: i64,
        hi: i64,
    },
    #[error("channel delay spread of {spread} samples exceeds cyclic prefix of {n_cp}")]
    DelaySpreadExceedsCp { spread: usize, n_cp: usize },
    #[error("case {case} is inconsistent with offset n-l={offset} for this preamble")]
    InconsistentCase { case: &'static str, offset: i64 },
    #[error("outside validity domain: {0}")]
    OutsideValidity(String),
    #[error("no signal energy")]
    NoSignalEnergy,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
