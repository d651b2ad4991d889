use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::pool::IntermediatePool;
use super::trace::{EventKind, EventRecord};
use super::work::{Drafter, PoolEntry, Verified, Verifier};
use super::{collect_metrics, Mode, Oracles, RunOutput, Scheduler};
use crate::config::EngineConfig;
use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::types::{Request, RequestId};

enum Payload {
    Draft {
        entries: Vec<PoolEntry>,
        started: f64,
        s: usize,
    },
    Verify {
        results: Vec<Verified>,
        started: f64,
        t_llm: f64,
        s: usize,
    },
}

struct Pending {
    time: f64,
    seq: u64,
    payload: Payload,
}

impl Pending {
    fn rank(&self) -> u8 {
        match self.payload {
            Payload::Verify { .. } => 0,
            Payload::Draft { .. } => 1,
        }
    }

    fn key(&self) -> (f64, u8, u64) {
        (self.time, self.rank(), self.seq)
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed: BinaryHeap pops the earliest (time, verify-first, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ra, sa) = self.key();
        let (tb, rb, sb) = other.key();
        tb.total_cmp(&ta).then(rb.cmp(&ra)).then(sb.cmp(&sa))
    }
}

/// Discrete-event engine over simulated time.
///
/// Work is computed when a round starts and applied when its completion
/// event is processed; the clock jumps from event to event. Simultaneous
/// completions are processed verification first, then by start order.
pub struct SimEngine {
    mode: Mode,
    sched: Scheduler,
    drafter: Drafter,
    verifier: Verifier,
    cost: CostModel,
    pool: IntermediatePool,
    now: f64,
    queue: BinaryHeap<Pending>,
    next_seq: u64,
    drafter_busy: bool,
    verifier_busy: bool,
    /// Sequential mode: requests of the current batch not yet drafted.
    cycle: VecDeque<usize>,
    cycle_s: usize,
    events: Vec<EventRecord>,
    llm_intervals: Vec<(f64, f64)>,
    ssm_busy_ms: f64,
}

impl SimEngine {
    pub fn new(
        mode: Mode,
        requests: Vec<Request>,
        oracles: &Oracles,
        cost: &CostModel,
        cfg: &EngineConfig,
    ) -> Result<Self> {
        cost.validate()?;
        let sched = Scheduler::new(requests, cfg, oracles)?;
        let cfg = sched.cfg().clone();
        let mut engine = Self {
            mode,
            drafter: Drafter::new(oracles.ssms.clone(), cfg.seed, cfg.majority),
            verifier: Verifier::new(oracles.llm.clone(), cfg.seed),
            pool: IntermediatePool::new(cfg.b_llm),
            cost: *cost,
            sched,
            now: 0.0,
            queue: BinaryHeap::new(),
            next_seq: 0,
            drafter_busy: false,
            verifier_busy: false,
            cycle: VecDeque::new(),
            cycle_s: cfg.s_init,
            events: Vec::new(),
            llm_intervals: Vec::new(),
            ssm_busy_ms: 0.0,
        };
        engine.schedule()?;
        Ok(engine)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn pool_depth(&self) -> usize {
        self.pool.len()
    }

    pub fn is_finished(&self) -> bool {
        self.sched.is_done() && self.queue.is_empty()
    }

    /// Processes exactly one completion event.
    pub fn step_events(&mut self) -> Result<EventRecord> {
        let Some(ev) = self.queue.pop() else {
            return Err(if self.sched.is_done() {
                Error::EngineFinished
            } else {
                Error::Deadlock(format!(
                    "no events pending at t={} ms with requests unfinished (pool depth {})",
                    self.now,
                    self.pool.len()
                ))
            });
        };
        self.now = ev.time;
        let record = match ev.payload {
            Payload::Draft { entries, started, s } => {
                let ids: Vec<RequestId> = entries.iter().map(|e| e.output.request).collect();
                let voted = entries.iter().map(|e| e.output.voted_ssm).collect();
                self.sched.end_draft(&ids)?;
                self.pool.push_all(entries);
                self.drafter_busy = false;
                EventRecord {
                    seq: ev.seq,
                    time_ms: self.now,
                    kind: EventKind::Draft,
                    started_ms: started,
                    s,
                    requests: ids,
                    accepted: Vec::new(),
                    voted,
                    pool_depth: self.pool.len(),
                    weights: self.sched.weights().weights().to_vec(),
                }
            }
            Payload::Verify {
                results,
                started,
                t_llm,
                s,
            } => {
                let finished = self.sched.apply_verified(&results, t_llm, self.now)?;
                for id in finished {
                    self.drafter.forget(id);
                    self.verifier.forget(id);
                }
                self.verifier_busy = false;
                EventRecord {
                    seq: ev.seq,
                    time_ms: self.now,
                    kind: EventKind::Verify,
                    started_ms: started,
                    s,
                    requests: results.iter().map(|v| v.request).collect(),
                    accepted: results.iter().map(|v| v.result.accepted_count).collect(),
                    voted: results.iter().map(|v| v.voted_ssm).collect(),
                    pool_depth: self.pool.len(),
                    weights: self.sched.weights().weights().to_vec(),
                }
            }
        };
        log::trace!(
            "t={:.3} {:?} {:?} pool={}",
            record.time_ms,
            record.kind,
            record.requests,
            record.pool_depth
        );
        self.schedule()?;
        self.events.push(record.clone());
        Ok(record)
    }

    /// Runs until every request has finished.
    pub fn run(mut self) -> Result<RunOutput> {
        loop {
            match self.step_events() {
                Ok(_) => {}
                Err(Error::EngineFinished) => break,
                Err(e) => return Err(e),
            }
        }
        let max_depth = self.pool.max_depth();
        let trace = self.sched.into_trace(
            self.mode,
            self.now,
            self.events,
            self.llm_intervals,
            self.ssm_busy_ms,
            max_depth,
        );
        Ok(RunOutput {
            metrics: collect_metrics(&trace),
            trace,
        })
    }

    fn push(&mut self, time: f64, payload: Payload) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Pending { time, seq, payload });
    }

    fn schedule(&mut self) -> Result<()> {
        match self.mode {
            Mode::Pipelined => {
                if !self.verifier_busy && !self.pool.is_empty() {
                    self.start_verify()?;
                }
                if !self.drafter_busy && self.pool.accepts_drafting() && self.sched.has_ready() {
                    let idxs = self.sched.take_ready(self.sched.cfg().b_ssm);
                    let s = self.sched.current_s();
                    self.start_draft(&idxs, s)?;
                }
            }
            Mode::Sequential => {
                if self.drafter_busy || self.verifier_busy {
                    return Ok(());
                }
                if self.cycle.is_empty() && self.pool.is_empty() && self.sched.has_ready() {
                    self.cycle = self.sched.take_ready(self.sched.cfg().b_llm).into();
                    self.cycle_s = self.sched.current_s();
                }
                if !self.cycle.is_empty() {
                    let n = self.cycle.len().min(self.sched.cfg().b_ssm);
                    let idxs: Vec<usize> = self.cycle.drain(..n).collect();
                    self.start_draft(&idxs, self.cycle_s)?;
                } else if !self.pool.is_empty() {
                    self.start_verify()?;
                }
            }
        }
        Ok(())
    }

    fn start_draft(&mut self, idxs: &[usize], s: usize) -> Result<()> {
        let batch = self.sched.begin_draft(idxs)?;
        let entries = self.drafter.draft(&batch, s, self.sched.weights())?;
        let duration = s as f64 * self.cost.t_ssm(batch.len());
        self.ssm_busy_ms += duration;
        self.drafter_busy = true;
        let started = self.now;
        self.push(self.now + duration, Payload::Draft { entries, started, s });
        Ok(())
    }

    fn start_verify(&mut self) -> Result<()> {
        let batch = self.pool.take_batch();
        let results = self.verifier.verify_batch(&batch)?;
        let s = results.iter().map(|v| v.s_used).max().unwrap_or(1);
        let t_llm = self.cost.t_llm(batch.len(), s);
        self.llm_intervals.push((self.now, self.now + t_llm));
        self.verifier_busy = true;
        let started = self.now;
        self.push(
            self.now + t_llm,
            Payload::Verify {
                results,
                started,
                t_llm,
                s,
            },
        );
        Ok(())
    }
}
