//! Wall-clock runner: one drafter thread, one verifier thread and the
//! calling thread as scheduler.
//!
//! The intermediate pool is the only shared structure (mutex + condvar).
//! Everything else moves over channels: the scheduler hands draft jobs to
//! the drafter together with a snapshot of `s` and the SSM weights, and
//! both workers report completions back on one event channel. Weights and
//! the length selector are only touched by the scheduler.

use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::pool::IntermediatePool;
use super::trace::{EventKind, EventRecord};
use super::work::{Drafter, Verified, Verifier};
use super::{collect_metrics, Mode, Oracles, RunOutput, Scheduler};
use crate::config::EngineConfig;
use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::types::{Request, RequestId, TokenId};
use crate::voter::{SsmId, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealOptions {
    /// Each round sleeps for its cost-model duration times this factor, to
    /// stand in for device latency. Zero means compute time only.
    pub time_scale: f64,
    /// Abort if no completion arrives for this long.
    pub stall_timeout: Duration,
}

impl Default for RealOptions {
    fn default() -> Self {
        Self {
            time_scale: 0.0,
            stall_timeout: Duration::from_secs(30),
        }
    }
}

struct DraftJob {
    batch: Vec<(RequestId, Arc<[TokenId]>)>,
    s: usize,
    weights: WeightTable,
}

enum WorkerEvent {
    Drafted {
        ids: Vec<RequestId>,
        voted: Vec<SsmId>,
        s: usize,
        started: f64,
        ended: f64,
    },
    Verified {
        results: Vec<Verified>,
        s: usize,
        started: f64,
        ended: f64,
    },
    /// The verifier took a batch, so the drafter may be allowed to run.
    Taken,
    Failed(Error),
}

struct SharedPool {
    state: Mutex<PoolState>,
    ready: Condvar,
}

struct PoolState {
    pool: IntermediatePool,
    shutdown: bool,
}

fn ms_since(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

fn emulate(ms: f64, scale: f64) {
    if scale > 0.0 {
        thread::sleep(Duration::from_secs_f64(ms * scale / 1e3));
    }
}

/// Runs the pipelined schedule with real concurrency.
pub fn run_threaded(
    requests: Vec<Request>,
    oracles: &Oracles,
    cost: &CostModel,
    cfg: &EngineConfig,
    opts: RealOptions,
) -> Result<RunOutput> {
    cost.validate()?;
    let mut sched = Scheduler::new(requests, cfg, oracles)?;
    let cfg = sched.cfg().clone();
    let cost = *cost;
    let t0 = Instant::now();

    let shared = Arc::new(SharedPool {
        state: Mutex::new(PoolState {
            pool: IntermediatePool::new(cfg.b_llm),
            shutdown: false,
        }),
        ready: Condvar::new(),
    });
    let (job_tx, job_rx) = mpsc::channel::<DraftJob>();
    let (ev_tx, ev_rx) = mpsc::channel::<WorkerEvent>();

    let drafter_handle = {
        let shared = shared.clone();
        let ev_tx = ev_tx.clone();
        let mut drafter = Drafter::new(oracles.ssms.clone(), cfg.seed, cfg.majority);
        thread::Builder::new()
            .name("drafter".into())
            .spawn(move || {
                for job in job_rx {
                    let started = ms_since(t0);
                    let entries = match drafter.draft(&job.batch, job.s, &job.weights) {
                        Ok(e) => e,
                        Err(e) => {
                            let _ = ev_tx.send(WorkerEvent::Failed(e));
                            return;
                        }
                    };
                    emulate(job.s as f64 * cost.t_ssm(job.batch.len()), opts.time_scale);
                    let ids = entries.iter().map(|e| e.output.request).collect();
                    let voted = entries.iter().map(|e| e.output.voted_ssm).collect();
                    // Publish and report under the lock: the scheduler must
                    // see the completion before any verification of these
                    // entries, and must see the new depth when it next
                    // checks the throttle.
                    let mut st = shared.state.lock().unwrap();
                    st.pool.push_all(entries);
                    let _ = ev_tx.send(WorkerEvent::Drafted {
                        ids,
                        voted,
                        s: job.s,
                        started,
                        ended: ms_since(t0),
                    });
                    drop(st);
                    shared.ready.notify_all();
                }
            })
            .expect("spawn drafter")
    };

    let verifier_handle = {
        let shared = shared.clone();
        let ev_tx = ev_tx.clone();
        let mut verifier = Verifier::new(oracles.llm.clone(), cfg.seed);
        thread::Builder::new()
            .name("verifier".into())
            .spawn(move || loop {
                let batch = {
                    let mut st = shared.state.lock().unwrap();
                    while st.pool.is_empty() && !st.shutdown {
                        st = shared.ready.wait(st).unwrap();
                    }
                    if st.shutdown {
                        return;
                    }
                    st.pool.take_batch()
                };
                let _ = ev_tx.send(WorkerEvent::Taken);
                let started = ms_since(t0);
                let results = match verifier.verify_batch(&batch) {
                    Ok(r) => r,
                    Err(e) => {
                        let _ = ev_tx.send(WorkerEvent::Failed(e));
                        return;
                    }
                };
                let s = results.iter().map(|v| v.s_used).max().unwrap_or(1);
                emulate(cost.t_llm(batch.len(), s), opts.time_scale);
                let _ = ev_tx.send(WorkerEvent::Verified {
                    results,
                    s,
                    started,
                    ended: ms_since(t0),
                });
            })
            .expect("spawn verifier")
    };
    drop(ev_tx);

    let outcome = scheduler_loop(&mut sched, &shared, &job_tx, &ev_rx, &cfg, opts);

    drop(job_tx);
    {
        let mut st = shared.state.lock().unwrap();
        st.shutdown = true;
        shared.ready.notify_all();
    }
    let _ = drafter_handle.join();
    let _ = verifier_handle.join();

    let (events, llm_intervals, ssm_busy) = outcome?;
    let total = events.last().map(|e| e.time_ms).unwrap_or(0.0);
    let max_depth = shared.state.lock().unwrap().pool.max_depth();
    let trace = sched.into_trace(Mode::Pipelined, total, events, llm_intervals, ssm_busy, max_depth);
    Ok(RunOutput {
        metrics: collect_metrics(&trace),
        trace,
    })
}

type LoopOutput = (Vec<EventRecord>, Vec<(f64, f64)>, f64);

fn scheduler_loop(
    sched: &mut Scheduler,
    shared: &SharedPool,
    job_tx: &mpsc::Sender<DraftJob>,
    ev_rx: &mpsc::Receiver<WorkerEvent>,
    cfg: &EngineConfig,
    opts: RealOptions,
) -> Result<LoopOutput> {
    let mut events = Vec::new();
    let mut llm_intervals = Vec::new();
    let mut ssm_busy = 0.0;
    let mut drafter_busy = false;
    let mut seq = 0u64;

    while !sched.is_done() {
        if !drafter_busy && sched.has_ready() {
            let room = shared.state.lock().unwrap().pool.accepts_drafting();
            if room {
                let idxs = sched.take_ready(cfg.b_ssm);
                let batch = sched.begin_draft(&idxs)?;
                let job = DraftJob {
                    batch,
                    s: sched.current_s(),
                    weights: sched.weights().clone(),
                };
                job_tx
                    .send(job)
                    .map_err(|_| Error::Deadlock("drafter thread exited".into()))?;
                drafter_busy = true;
            }
        }
        let ev = match ev_rx.recv_timeout(opts.stall_timeout) {
            Ok(ev) => ev,
            Err(_) => {
                return Err(Error::Deadlock(format!(
                    "no worker progress for {:?} (drafter busy: {drafter_busy})",
                    opts.stall_timeout
                )))
            }
        };
        let record = match ev {
            WorkerEvent::Failed(e) => return Err(e),
            WorkerEvent::Taken => continue,
            WorkerEvent::Drafted {
                ids,
                voted,
                s,
                started,
                ended,
            } => {
                sched.end_draft(&ids)?;
                drafter_busy = false;
                ssm_busy += ended - started;
                EventRecord {
                    seq,
                    time_ms: ended,
                    kind: EventKind::Draft,
                    started_ms: started,
                    s,
                    requests: ids,
                    accepted: Vec::new(),
                    voted,
                    pool_depth: shared.state.lock().unwrap().pool.len(),
                    weights: sched.weights().weights().to_vec(),
                }
            }
            WorkerEvent::Verified {
                results,
                s,
                started,
                ended,
            } => {
                sched.apply_verified(&results, ended - started, ended)?;
                llm_intervals.push((started, ended));
                EventRecord {
                    seq,
                    time_ms: ended,
                    kind: EventKind::Verify,
                    started_ms: started,
                    s,
                    requests: results.iter().map(|v| v.request).collect(),
                    accepted: results.iter().map(|v| v.result.accepted_count).collect(),
                    voted: results.iter().map(|v| v.voted_ssm).collect(),
                    pool_depth: shared.state.lock().unwrap().pool.len(),
                    weights: sched.weights().weights().to_vec(),
                }
            }
        };
        seq += 1;
        events.push(record);
    }
    Ok((events, llm_intervals, ssm_busy))
}
