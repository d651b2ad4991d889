//! Request pools, the intermediate pool between drafting and
//! verification, and the runners that drive them.
//!
//! [`SimEngine`] advances a simulated clock by cost-model durations and is
//! fully deterministic. [`real::run_threaded`] runs drafting and
//! verification on separate threads against the wall clock.

mod metrics;
mod pool;
pub mod real;
mod sim;
mod trace;
mod work;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use metrics::{collect_metrics, RunMetrics};
pub use pool::IntermediatePool;
pub use sim::SimEngine;
pub use trace::{EventKind, EventRecord, RequestRecord, RoundRecord, RunTrace, VerificationRecord};
pub use work::{Drafter, PoolEntry, Verified, Verifier};

use crate::config::{validate_config, EngineConfig};
use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::oracle::ModelOracle;
use crate::selector::{Decision, MonitorSample, SelectorState};
use crate::types::{Request, RequestId, RequestState, TokenId};
use crate::voter::WeightTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Draft a batch, then verify it; the two never overlap.
    Sequential,
    /// Drafting and verification overlap through the intermediate pool.
    Pipelined,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(Mode::Sequential),
            "pipelined" => Ok(Mode::Pipelined),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// The target model and the drafters.
#[derive(Debug, Clone)]
pub struct Oracles {
    pub llm: Arc<dyn ModelOracle>,
    pub ssms: Vec<Arc<dyn ModelOracle>>,
}

impl Oracles {
    fn check(&self, cfg: &EngineConfig) -> Result<()> {
        if self.ssms.is_empty() {
            return Err(Error::Setup("at least one SSM oracle is required".into()));
        }
        for o in std::iter::once(&self.llm).chain(&self.ssms) {
            if o.vocab_size() != cfg.vocab_size {
                return Err(Error::DistMismatch {
                    expected: cfg.vocab_size,
                    found: o.vocab_size(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: RunTrace,
}

pub fn run_sequential(
    requests: Vec<Request>,
    oracles: &Oracles,
    cost: &CostModel,
    cfg: &EngineConfig,
) -> Result<RunOutput> {
    SimEngine::new(Mode::Sequential, requests, oracles, cost, cfg)?.run()
}

pub fn run_pipelined(
    requests: Vec<Request>,
    oracles: &Oracles,
    cost: &CostModel,
    cfg: &EngineConfig,
) -> Result<RunOutput> {
    SimEngine::new(Mode::Pipelined, requests, oracles, cost, cfg)?.run()
}

pub fn run_simulated(
    mode: Mode,
    requests: Vec<Request>,
    oracles: &Oracles,
    cost: &CostModel,
    cfg: &EngineConfig,
) -> Result<RunOutput> {
    SimEngine::new(mode, requests, oracles, cost, cfg)?.run()
}

/// Scheduler-side state: request pools, SSM weights and the length
/// selector. Only the context that applies verification results mutates
/// it.
pub(crate) struct Scheduler {
    cfg: EngineConfig,
    requests: Vec<Request>,
    index: HashMap<RequestId, usize>,
    /// FIFO over pending and running requests.
    ready: VecDeque<usize>,
    start_len: Vec<usize>,
    finish_ms: Vec<Option<f64>>,
    unfinished: usize,
    weights: WeightTable,
    selector: SelectorState,
    rounds: Vec<RoundRecord>,
    verifications: Vec<VerificationRecord>,
    transitions: Vec<(RequestId, RequestState, RequestState)>,
}

impl Scheduler {
    pub(crate) fn new(requests: Vec<Request>, cfg: &EngineConfig, oracles: &Oracles) -> Result<Self> {
        let cfg = validate_config(cfg.clone())?;
        oracles.check(&cfg)?;
        let weights = WeightTable::new(cfg.weights_for(oracles.ssms.len())?)?;
        let mut index = HashMap::new();
        for (i, r) in requests.iter().enumerate() {
            if index.insert(r.id, i).is_some() {
                return Err(Error::Setup(format!("duplicate request id {}", r.id)));
            }
            if r.state() != RequestState::Pending {
                return Err(Error::Setup(format!("request {} is not pending", r.id)));
            }
        }
        let n = requests.len();
        let mut sched = Self {
            selector: SelectorState::new(&cfg),
            cfg,
            start_len: requests.iter().map(|r| r.generated.len()).collect(),
            requests,
            index,
            ready: VecDeque::new(),
            finish_ms: vec![None; n],
            unfinished: 0,
            weights,
            rounds: Vec::new(),
            verifications: Vec::new(),
            transitions: Vec::new(),
        };
        for i in 0..n {
            if sched.requests[i].remaining() == 0 {
                sched.transition(i, RequestState::Finished)?;
                sched.finish_ms[i] = Some(0.0);
            } else {
                sched.ready.push_back(i);
                sched.unfinished += 1;
            }
        }
        Ok(sched)
    }

    fn transition(&mut self, idx: usize, to: RequestState) -> Result<()> {
        let req = &mut self.requests[idx];
        let from = req.state();
        req.transition(to)?;
        self.transitions.push((req.id, from, to));
        Ok(())
    }

    pub(crate) fn cfg(&self) -> &EngineConfig {
        &self.cfg
    }

    pub(crate) fn weights(&self) -> &WeightTable {
        &self.weights
    }

    pub(crate) fn current_s(&self) -> usize {
        if self.cfg.adaptive_s {
            self.selector.current_s()
        } else {
            self.cfg.s_init
        }
    }

    pub(crate) fn has_ready(&self) -> bool {
        !self.ready.is_empty()
    }

    pub(crate) fn is_done(&self) -> bool {
        self.unfinished == 0
    }

    pub(crate) fn take_ready(&mut self, n: usize) -> Vec<usize> {
        let n = n.min(self.ready.len());
        self.ready.drain(..n).collect()
    }

    /// Moves requests into drafting and returns their contexts.
    pub(crate) fn begin_draft(&mut self, idxs: &[usize]) -> Result<Vec<(RequestId, Arc<[TokenId]>)>> {
        idxs.iter()
            .map(|&i| {
                self.transition(i, RequestState::Drafting)?;
                let r = &self.requests[i];
                Ok((r.id, r.context().into()))
            })
            .collect()
    }

    pub(crate) fn end_draft(&mut self, ids: &[RequestId]) -> Result<()> {
        for id in ids {
            self.transition(self.index[id], RequestState::AwaitingVerification)?;
        }
        Ok(())
    }

    /// Applies one verification round and returns the requests it finished.
    pub(crate) fn apply_verified(
        &mut self,
        results: &[Verified],
        t_llm: f64,
        now: f64,
    ) -> Result<Vec<RequestId>> {
        let round = self.rounds.len();
        let mut finished = Vec::new();
        for v in results {
            let idx = *self
                .index
                .get(&v.request)
                .ok_or_else(|| Error::Setup(format!("unknown request {}", v.request)))?;
            let (kept, done) = self.requests[idx].extend_generated(&v.result.emitted, self.cfg.stop_token);
            if kept == 0 {
                return Err(Error::NoProgress(v.request));
            }
            self.weights.record_acr(v.voted_ssm, v.result.acceptance_rate)?;
            self.verifications.push(VerificationRecord {
                round,
                request: v.request,
                voted_ssm: v.voted_ssm,
                s_used: v.s_used,
                accepted_count: v.result.accepted_count,
                kept,
            });
            if done {
                self.transition(idx, RequestState::Finished)?;
                self.finish_ms[idx] = Some(now);
                self.unfinished -= 1;
                finished.push(v.request);
            } else {
                self.transition(idx, RequestState::Running)?;
                self.ready.push_back(idx);
            }
        }
        self.weights.update_weights(&self.cfg);

        let vl = results.iter().map(|v| (v.result.accepted_count + 1) as f64).sum::<f64>() / results.len() as f64;
        let s_used = results
            .first()
            .map(|v| v.s_used)
            .filter(|s| results.iter().all(|v| v.s_used == *s));
        let decision = if self.cfg.adaptive_s {
            // Mixed batches straddle an `s` change and carry no clean signal.
            if let Some(s) = s_used {
                self.selector.observe(MonitorSample::new(round, t_llm, vl, s))?;
            }
            let d = self.selector.maybe_adjust();
            if d != Decision::Hold {
                log::debug!("round {round}: {d:?}, s -> {}", self.selector.current_s());
            }
            d
        } else {
            Decision::Hold
        };
        self.rounds.push(RoundRecord {
            round,
            time_ms: now,
            batch: results.len(),
            s_used,
            t_llm,
            vl,
            ratio: t_llm / vl,
            decision,
            s_next: self.current_s(),
            weights: self.weights.weights().to_vec(),
        });
        Ok(finished)
    }

    pub(crate) fn into_trace(
        self,
        mode: Mode,
        total_time_ms: f64,
        events: Vec<EventRecord>,
        llm_intervals: Vec<(f64, f64)>,
        ssm_busy_ms: f64,
        max_pool_depth: usize,
    ) -> RunTrace {
        let requests = self
            .requests
            .iter()
            .zip(&self.start_len)
            .zip(&self.finish_ms)
            .map(|((r, &start), &finish_ms)| RequestRecord {
                id: r.id,
                arrival_ms: 0.0,
                finish_ms,
                prompt_len: r.prompt.len(),
                output: r.generated[start..].to_vec(),
            })
            .collect();
        RunTrace {
            mode,
            n_ssms: self.weights.len(),
            b_llm: self.cfg.b_llm,
            b_ssm: self.cfg.b_ssm,
            total_time_ms,
            events,
            rounds: self.rounds,
            verifications: self.verifications,
            requests,
            transitions: self.transitions,
            llm_intervals,
            ssm_busy_ms,
            max_pool_depth,
        }
    }
}
