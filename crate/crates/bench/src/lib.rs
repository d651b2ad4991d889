//! Scenario runner for the aggspec engine.
//!
//! A [`Scenario`] file describes the target and drafter oracles, the cost
//! model, a synthetic workload and an optional sweep axis. [`run_sweep`]
//! runs one simulated engine per sweep cell and writes a [`ResultTable`]
//! plus per-cell traces.

pub mod error;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::{BenchError, Result};
pub use report::{emit_report, ResultRow, ResultTable};
pub use scenario::{load_scenario, parse_scenario, Axis, Format, Scenario, Stage, SweepValue};
pub use sweep::{oracle_s, run_cells, run_sweep, Cell, OracleReport};
