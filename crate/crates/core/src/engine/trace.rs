use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::selector::Decision;
use crate::types::{RequestId, RequestState, TokenId};
use crate::voter::SsmId;

use super::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Draft,
    Verify,
}

/// One completed drafting or verification round. Serialized as one line
/// of the event trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub time_ms: f64,
    pub kind: EventKind,
    pub started_ms: f64,
    pub s: usize,
    pub requests: Vec<RequestId>,
    /// Verification only: accepted draft tokens per request.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepted: Vec<usize>,
    pub voted: Vec<SsmId>,
    /// Pool depth once the event has been applied.
    pub pool_depth: usize,
    pub weights: Vec<f64>,
}

/// Selector-facing summary of one verification round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub time_ms: f64,
    pub batch: usize,
    /// `None` when the batch mixed drafts made under different `s`.
    pub s_used: Option<usize>,
    pub t_llm: f64,
    pub vl: f64,
    pub ratio: f64,
    pub decision: Decision,
    pub s_next: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub round: usize,
    pub request: RequestId,
    pub voted_ssm: SsmId,
    pub s_used: usize,
    pub accepted_count: usize,
    /// Tokens kept after truncation to the request's budget.
    pub kept: usize,
}

impl VerificationRecord {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted_count as f64 / self.s_used as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: RequestId,
    pub arrival_ms: f64,
    pub finish_ms: Option<f64>,
    pub prompt_len: usize,
    /// Tokens generated during this run.
    pub output: Vec<TokenId>,
}

/// Everything a run leaves behind; metrics are derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub mode: Mode,
    pub n_ssms: usize,
    pub b_llm: usize,
    pub b_ssm: usize,
    pub total_time_ms: f64,
    pub events: Vec<EventRecord>,
    pub rounds: Vec<RoundRecord>,
    pub verifications: Vec<VerificationRecord>,
    pub requests: Vec<RequestRecord>,
    pub transitions: Vec<(RequestId, RequestState, RequestState)>,
    /// `[start, end)` of every verification round.
    pub llm_intervals: Vec<(f64, f64)>,
    pub ssm_busy_ms: f64,
    pub max_pool_depth: usize,
}

impl RunTrace {
    /// Writes the event trace as newline-delimited JSON.
    pub fn write_events<W: Write>(&self, mut w: W) -> io::Result<()> {
        for ev in &self.events {
            serde_json::to_writer(&mut w, ev)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn final_weights(&self) -> Option<&[f64]> {
        self.rounds.last().map(|r| r.weights.as_slice())
    }
}
