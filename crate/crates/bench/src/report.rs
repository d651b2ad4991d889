use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::scenario::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub sweep_value: String,
    /// Tokens per second of simulated time.
    pub throughput: f64,
    pub normalized_latency_ms: f64,
    pub mean_acceptance: f64,
    pub final_s: usize,
    pub llm_utilization: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let rows = csv::Reader::from_reader(bytes)
            .deserialize()
            .collect::<Result<_, csv::Error>>()?;
        Ok(Self { rows })
    }

    pub fn to_text(&self) -> String {
        let header = [
            "scenario",
            "sweep",
            "tok/s",
            "ms/token",
            "accept",
            "final_s",
            "llm_util",
        ];
        let cells: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.scenario.clone(),
                    r.sweep_value.clone(),
                    format!("{:.2}", r.throughput),
                    format!("{:.3}", r.normalized_latency_ms),
                    format!("{:.4}", r.mean_acceptance),
                    r.final_s.to_string(),
                    format!("{:.4}", r.llm_utilization),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let mut line = |fields: &[&str]| {
            let parts: Vec<String> = fields
                .iter()
                .zip(widths)
                .enumerate()
                // Names left-aligned, numbers right-aligned.
                .map(|(i, (f, w))| if i < 2 { format!("{f:<w$}") } else { format!("{f:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&header);
        for row in &cells {
            line(&row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }
}

/// Writes the table to `path`. Nothing is written for an empty table.
pub fn emit_report(table: &ResultTable, format: Format, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let bytes = match format {
        Format::Csv => table.to_csv()?,
        Format::Text => table.to_text().into_bytes(),
    };
    std::fs::write(path, bytes).map_err(BenchError::io(path))
}
