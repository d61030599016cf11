use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("field belongs to a different basis or grid")]
    BasisMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("eigenbasis truncation insufficient: {0}")]
    InsufficientTruncation(String),
    #[error("non-finite state at t = {t}: {detail}")]
    NonFinite { t: f64, detail: String },
    #[error("CFL violation persists after {halvings} halvings (dt = {dt}, max |u| = {umax})")]
    Cfl { halvings: u32, dt: f64, umax: f64 },
    #[error("time {t} outside record span [{t0}, {t1}]")]
    OutOfSpan { t: f64, t0: f64, t1: f64 },
    #[error("path left the domain at level {level}, t = {t}")]
    PathExit { level: usize, t: f64 },
    #[error("bad snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
