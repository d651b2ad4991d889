use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use aggspec_core::engine::{run_simulated, RunOutput, RunTrace};
use aggspec_core::rng::derive_seed;
use aggspec_core::selector::{optimal_s_oracle, Decision};

use crate::error::{BenchError, Result};
use crate::report::{emit_report, ResultRow, ResultTable};
use crate::scenario::{Axis, Scenario, SweepValue};

#[derive(Debug, Clone)]
pub struct Cell {
    pub value: SweepValue,
    pub seed: u64,
    pub output: RunOutput,
}

impl Cell {
    pub fn row(&self, scenario: &str) -> ResultRow {
        let m = &self.output.metrics;
        ResultRow {
            scenario: scenario.to_string(),
            sweep_value: self.value.to_string(),
            throughput: m.throughput,
            normalized_latency_ms: m.normalized_latency_ms,
            mean_acceptance: m.mean_acceptance_rate,
            final_s: m.final_s,
            llm_utilization: m.llm_utilization,
        }
    }

    /// Mean tokens emitted per verified draft, before budget truncation.
    pub fn measured_vl(&self) -> f64 {
        let v = &self.output.trace.verifications;
        if v.is_empty() {
            return 0.0;
        }
        v.iter().map(|r| (r.accepted_count + 1) as f64).sum::<f64>() / v.len() as f64
    }
}

fn run_cell(scenario: &Scenario, value: SweepValue) -> Result<Cell> {
    let (mut cfg, mode) = scenario.cell_config(value);
    let seed = derive_seed(scenario.engine.seed, value.seed_key());
    cfg.seed = seed;
    let cell_err = |source| BenchError::Cell {
        scenario: scenario.name.clone(),
        cell: value.to_string(),
        source,
    };
    let oracles = scenario.build_oracles()?;
    let output = run_simulated(mode, scenario.build_requests(), &oracles, &scenario.cost, &cfg).map_err(cell_err)?;
    log::info!(
        "{} {}: {:.1} tok/s, acceptance {:.3}, final s {}",
        scenario.name,
        value,
        output.metrics.throughput,
        output.metrics.mean_acceptance_rate,
        output.metrics.final_s
    );
    Ok(Cell { value, seed, output })
}

/// Runs every cell of the scenario's sweep, in parallel, returning them in
/// sweep order.
pub fn run_cells(scenario: &Scenario) -> Result<Vec<Cell>> {
    run_values(scenario, &scenario.sweep_values())
}

fn run_values(scenario: &Scenario, values: &[SweepValue]) -> Result<Vec<Cell>> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(values.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Cell>>>> = Mutex::new((0..values.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&value) = values.get(i) else { break };
                let cell = run_cell(scenario, value);
                slots.lock().unwrap()[i] = Some(cell);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every cell ran"))
        .collect()
}

/// Runs the sweep, writes the table to `out_dir` and one event trace
/// (NDJSON) and round trace (CSV) per cell beside it. Returns the table
/// and the path it was written to.
pub fn run_sweep(scenario: &Scenario, out_dir: &Path) -> Result<(ResultTable, PathBuf)> {
    let cells = run_cells(scenario)?;
    std::fs::create_dir_all(out_dir).map_err(BenchError::io(out_dir))?;
    for cell in &cells {
        let stem = format!("{}-{}", scenario.name, cell.value.slug());
        let events = out_dir.join(format!("{stem}.events.ndjson"));
        let f = File::create(&events).map_err(BenchError::io(&events))?;
        cell.output
            .trace
            .write_events(BufWriter::new(f))
            .map_err(BenchError::io(&events))?;
        let rounds = out_dir.join(format!("{stem}.rounds.csv"));
        write_rounds(&cell.output.trace, &rounds)?;
    }
    let table = ResultTable {
        rows: cells.iter().map(|c| c.row(&scenario.name)).collect(),
    };
    let ext = match scenario.format {
        crate::scenario::Format::Csv => "csv",
        crate::scenario::Format::Text => "txt",
    };
    let path = out_dir.join(format!("{}.{ext}", scenario.name));
    emit_report(&table, scenario.format, &path)?;
    Ok((table, path))
}

/// Per-round selector and weight trajectory.
pub fn write_rounds(trace: &RunTrace, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(BenchError::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    let mut header: Vec<String> = ["round", "time_ms", "batch", "s_used", "t_llm", "vl", "ratio", "decision", "s_next"]
        .map(String::from)
        .to_vec();
    header.extend((0..trace.n_ssms).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for r in &trace.rounds {
        let decision = match r.decision {
            Decision::Increase => "increase",
            Decision::Decrease => "decrease",
            Decision::Hold => "hold",
        };
        let mut rec = vec![
            r.round.to_string(),
            r.time_ms.to_string(),
            r.batch.to_string(),
            r.s_used.map(|s| s.to_string()).unwrap_or_default(),
            r.t_llm.to_string(),
            r.vl.to_string(),
            r.ratio.to_string(),
            decision.to_string(),
            r.s_next.to_string(),
        ];
        rec.extend(r.weights.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(BenchError::io(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub s_star: usize,
    /// `(s, measured vl, t_llm(b_llm, s) / vl)` for every `s` in range.
    pub curve: Vec<(usize, f64, f64)>,
}

/// Measures vl(s) with fixed-`s` runs over `[s_min, s_max]` and returns
/// the `s` minimizing LLM time per emitted token at batch `b_llm`.
pub fn oracle_s(scenario: &Scenario) -> Result<OracleReport> {
    let mut sc = scenario.clone();
    sc.sweep.axis = Axis::S;
    let (lo, hi) = (sc.engine.s_min, sc.engine.s_max);
    sc.sweep.s_range = Some([lo, hi]);
    let values: Vec<SweepValue> = sc.sweep_values();
    let cells = run_values(&sc, &values)?;
    let vl: Vec<f64> = cells.iter().map(Cell::measured_vl).collect();
    let b = sc.engine.b_llm;
    let s_star = optimal_s_oracle(&sc.cost, |s| vl[s - lo], b, (lo, hi));
    let curve = (lo..=hi)
        .map(|s| (s, vl[s - lo], sc.cost.t_llm(b, s) / vl[s - lo]))
        .collect();
    Ok(OracleReport { s_star, curve })
}
