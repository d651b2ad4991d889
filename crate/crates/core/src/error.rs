use thiserror::Error;

use crate::types::RequestId;
use crate::voter::SsmId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),

    #[error("invalid probability distribution: {0}")]
    InvalidDist(String),

    #[error("context of {len} tokens exceeds the cap of {cap}")]
    ContextTooLong { len: usize, cap: usize },

    #[error("context is empty")]
    EmptyContext,

    #[error("no transition row for context {0:?}")]
    UnknownContext(Vec<u32>),

    #[error("vocabulary mismatch: expected {expected}, found {found}")]
    DistMismatch { expected: usize, found: usize },

    #[error("draft sequences differ in length: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("no drafts to merge")]
    NoDrafts,

    #[error("unknown SSM {0}")]
    UnknownSsm(SsmId),

    #[error("invalid monitor sample: {0}")]
    InvalidSample(String),

    #[error("illegal request transition for {id}: {from:?} -> {to:?}")]
    IllegalTransition {
        id: RequestId,
        from: crate::types::RequestState,
        to: crate::types::RequestState,
    },

    #[error("request {0} cannot make progress")]
    NoProgress(RequestId),

    #[error("pipeline deadlock: {0}")]
    Deadlock(String),

    #[error("no events remain")]
    EngineFinished,

    #[error("engine setup: {0}")]
    Setup(String),
}
