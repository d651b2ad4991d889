//! Adaptive speculation length.
//!
//! Every verification round reports `t_llm / vl`, the target-model time
//! spent per emitted token. Once `decision_threshold` rounds at the
//! current `s` have been seen, a least-squares line is fitted through the
//! ratios observed at the previous `s` followed by those at the current
//! one. A rising line means the last move made things worse, a falling
//! line that it helped; `s` then steps by `s_punish` or `s_reward`.
//!
//! Rounds drafted under an older `s` that are still in flight when `s`
//! changes are dropped so that each window reflects a single `s`.

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::cost::CostModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub round_index: usize,
    pub t_llm: f64,
    /// Mean emitted tokens per request in the round.
    pub vl: f64,
    pub ratio: f64,
    pub s_used: usize,
}

impl MonitorSample {
    pub fn new(round_index: usize, t_llm: f64, vl: f64, s_used: usize) -> Self {
        Self {
            round_index,
            t_llm,
            vl,
            ratio: t_llm / vl,
            s_used,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Increase,
    Decrease,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorState {
    current_s: usize,
    samples: Vec<MonitorSample>,
    /// Window collected at the previous `s`, prepended to the fit.
    reference: Vec<MonitorSample>,
    last_move: Option<Direction>,
    decision_threshold: usize,
    s_reward: usize,
    s_punish: usize,
    s_min: usize,
    s_max: usize,
}

impl SelectorState {
    pub fn new(cfg: &EngineConfig) -> Self {
        Self {
            current_s: cfg.s_init,
            samples: Vec::new(),
            reference: Vec::new(),
            last_move: None,
            decision_threshold: cfg.decision_threshold,
            s_reward: cfg.s_reward,
            s_punish: cfg.s_punish,
            s_min: cfg.s_min,
            s_max: cfg.s_max,
        }
    }

    pub fn current_s(&self) -> usize {
        self.current_s
    }

    /// Samples gathered at the current `s`.
    pub fn samples(&self) -> &[MonitorSample] {
        &self.samples
    }

    pub fn observe(&mut self, sample: MonitorSample) -> Result<()> {
        if !(sample.vl > 0.0) || !sample.t_llm.is_finite() {
            return Err(Error::InvalidSample(format!("vl = {}, t_llm = {}", sample.vl, sample.t_llm)));
        }
        if sample.s_used == self.current_s {
            self.samples.push(sample);
        }
        Ok(())
    }

    pub fn maybe_adjust(&mut self) -> Decision {
        if self.samples.len() < self.decision_threshold {
            return Decision::Hold;
        }
        let ratios: Vec<f64> = self
            .reference
            .iter()
            .chain(&self.samples)
            .map(|s| s.ratio)
            .collect();
        let slope = ls_slope(&ratios);
        if slope == 0.0 {
            return Decision::Hold;
        }
        // The rising/falling rule reads "worse"/"better" relative to the
        // last move; after a downward move the directions swap.
        let worse = slope > 0.0;
        let go_up = match self.last_move {
            Some(Direction::Down) => worse,
            _ => !worse,
        };
        let (next, decision, dir) = if go_up {
            ((self.current_s + self.s_reward).min(self.s_max), Decision::Increase, Direction::Up)
        } else {
            (
                self.current_s.saturating_sub(self.s_punish).max(self.s_min),
                Decision::Decrease,
                Direction::Down,
            )
        };
        self.reference = std::mem::take(&mut self.samples);
        if next != self.current_s {
            self.current_s = next;
            self.last_move = Some(dir);
        }
        decision
    }
}

/// Least-squares slope of `ys` against their ordinals `0, 1, 2, ...`.
pub fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let mean_x = (n - 1) as f64 / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(num, den), (i, y)| {
        let dx = i as f64 - mean_x;
        (num + dx * (y - mean_y), den + dx * dx)
    });
    num / den
}

/// Exhaustive `argmin_s t_llm(b, s) / vl(s)` over `s_range`, ties to the
/// smaller `s`.
pub fn optimal_s_oracle<F>(cost: &CostModel, vl_curve: F, b_llm: usize, s_range: (usize, usize)) -> usize
where
    F: Fn(usize) -> f64,
{
    let (lo, hi) = s_range;
    assert!(lo >= 1 && lo <= hi);
    let mut best = lo;
    let mut best_ratio = f64::INFINITY;
    for s in lo..=hi {
        let vl = vl_curve(s);
        assert!(vl > 0.0, "vl({s}) must be positive");
        let ratio = cost.t_llm(b_llm, s) / vl;
        if ratio < best_ratio {
            best = s;
            best_ratio = ratio;
        }
    }
    best
}

/// Expected emitted tokens per round when each drafted token survives
/// independently with probability `alpha`: `(1 − α^{s+1}) / (1 − α)`.
pub fn geometric_vl(alpha: f64, s: usize) -> f64 {
    if alpha >= 1.0 {
        return (s + 1) as f64;
    }
    (1.0 - alpha.powi(s as i32 + 1)) / (1.0 - alpha)
}
