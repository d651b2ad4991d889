use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::TokenId;

/// Engine tunables. Field names follow the cost-model notation
/// (`b_llm`, `b_ssm`, `s_*`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub vocab_size: usize,
    /// Verification batch size.
    pub b_llm: usize,
    /// Drafting batch size.
    pub b_ssm: usize,
    pub s_init: usize,
    pub s_min: usize,
    pub s_max: usize,
    pub s_reward: usize,
    pub s_punish: usize,
    pub decision_threshold: usize,
    pub reward_threshold: f64,
    pub punish_threshold: f64,
    pub reward_factor: f64,
    pub punish_factor: f64,
    /// One weight per SSM. Empty means 1.0 for every SSM.
    pub initial_weights: Vec<f64>,
    pub weight_floor: f64,
    pub weight_cap: f64,
    pub seed: u64,
    /// Vote across all SSMs; when false only the first SSM drafts.
    pub majority: bool,
    /// Let the length selector move `s`; when false `s_init` is fixed.
    pub adaptive_s: bool,
    pub stop_token: Option<TokenId>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            vocab_size: 32,
            b_llm: 8,
            b_ssm: 8,
            s_init: 4,
            s_min: 1,
            s_max: 12,
            s_reward: 1,
            s_punish: 1,
            decision_threshold: 8,
            reward_threshold: 0.7,
            punish_threshold: 0.3,
            reward_factor: 1.25,
            punish_factor: 0.8,
            initial_weights: Vec::new(),
            weight_floor: 1e-3,
            weight_cap: 1e3,
            seed: 0,
            majority: true,
            adaptive_s: true,
            stop_token: None,
        }
    }
}

impl EngineConfig {
    /// Initial weight vector for `n` SSMs.
    pub fn weights_for(&self, n: usize) -> Result<Vec<f64>> {
        match self.initial_weights.len() {
            0 => Ok(vec![1.0; n]),
            len if len == n => Ok(self.initial_weights.clone()),
            len => Err(Error::ConfigInvalid(vec![format!(
                "initial_weights has {len} entries for {n} SSMs"
            )])),
        }
    }
}

/// Returns `cfg` unchanged if every constraint holds, otherwise all
/// violations at once.
pub fn validate_config(cfg: EngineConfig) -> Result<EngineConfig> {
    let mut errs = Vec::new();
    let mut positive = |name: &str, v: usize| {
        if v == 0 {
            errs.push(format!("{name} must be ≥ 1"));
        }
    };
    positive("vocab_size", cfg.vocab_size);
    positive("b_llm", cfg.b_llm);
    positive("b_ssm", cfg.b_ssm);
    positive("s_init", cfg.s_init);
    positive("s_min", cfg.s_min);
    positive("s_max", cfg.s_max);
    positive("s_reward", cfg.s_reward);
    positive("s_punish", cfg.s_punish);
    positive("decision_threshold", cfg.decision_threshold);

    if cfg.s_min > cfg.s_max {
        errs.push("s_min must be ≤ s_max".into());
    }
    if cfg.s_init < cfg.s_min || cfg.s_init > cfg.s_max {
        errs.push("s_init must lie in [s_min, s_max]".into());
    }
    for (name, v) in [
        ("reward_threshold", cfg.reward_threshold),
        ("punish_threshold", cfg.punish_threshold),
    ] {
        if !(0.0..=1.0).contains(&v) {
            errs.push(format!("{name} must lie in [0, 1]"));
        }
    }
    if cfg.punish_threshold > cfg.reward_threshold {
        errs.push("punish_threshold must be ≤ reward_threshold".into());
    }
    if !(cfg.reward_factor > 1.0) || !cfg.reward_factor.is_finite() {
        errs.push("reward_factor must be > 1".into());
    }
    if !(cfg.punish_factor > 0.0) {
        errs.push("punish_factor must be > 0".into());
    }
    if !(cfg.punish_factor < 1.0) {
        errs.push("punish_factor must be < 1".into());
    }
    if !(cfg.weight_floor > 0.0) || !(cfg.weight_floor <= cfg.weight_cap) || !cfg.weight_cap.is_finite() {
        errs.push("weights must satisfy 0 < weight_floor ≤ weight_cap < ∞".into());
    }
    if cfg.initial_weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        errs.push("initial_weights must all be > 0".into());
    }
    if let Some(t) = cfg.stop_token {
        if t.index() >= cfg.vocab_size {
            errs.push("stop_token must be < vocab_size".into());
        }
    }

    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::ConfigInvalid(errs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(cfg: EngineConfig) -> Vec<String> {
        match validate_config(cfg) {
            Err(Error::ConfigInvalid(v)) => v,
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = EngineConfig::default();
        assert_eq!(validate_config(cfg.clone()).unwrap(), cfg);
    }

    #[test]
    fn ordered_lengths_are_valid() {
        let cfg = EngineConfig {
            s_min: 1,
            s_init: 4,
            s_max: 12,
            ..Default::default()
        };
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn punish_factor_above_one() {
        let v = violations(EngineConfig {
            punish_factor: 1.5,
            ..Default::default()
        });
        assert_eq!(v, vec!["punish_factor must be < 1".to_string()]);
    }

    #[test]
    fn zero_s_init() {
        let v = violations(EngineConfig {
            s_init: 0,
            ..Default::default()
        });
        assert!(v.contains(&"s_init must be ≥ 1".to_string()));
    }

    #[test]
    fn reports_every_violation() {
        let v = violations(EngineConfig {
            s_min: 5,
            s_max: 3,
            reward_threshold: 0.2,
            punish_threshold: 0.4,
            reward_factor: 0.9,
            initial_weights: vec![1.0, 0.0],
            ..Default::default()
        });
        assert!(v.len() >= 5, "{v:?}");
    }

    #[test]
    fn weights_for_ssm_count() {
        let cfg = EngineConfig::default();
        assert_eq!(cfg.weights_for(3).unwrap(), vec![1.0; 3]);
        let cfg = EngineConfig {
            initial_weights: vec![0.5, 2.0],
            ..Default::default()
        };
        assert_eq!(cfg.weights_for(2).unwrap(), vec![0.5, 2.0]);
        assert!(cfg.weights_for(3).is_err());
    }
}
