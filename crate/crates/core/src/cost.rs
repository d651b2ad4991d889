use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ssm,
    Llm,
}

/// Per-step latency model in milliseconds:
/// `t_ssm(b) = c0 + c1·b` and `t_llm(b, s) = d0 + d1·b + d2·b·s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub c0: f64,
    pub c1: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 0.1,
            d0: 10.0,
            d1: 1.0,
            d2: 0.5,
        }
    }
}

impl CostModel {
    pub fn new(c0: f64, c1: f64, d0: f64, d1: f64, d2: f64) -> Result<Self> {
        let m = Self { c0, c1, d0, d1, d2 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.c0, self.c1, self.d0, self.d1, self.d2];
        if coeffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::ConfigInvalid(vec!["cost coefficients must be non-negative".into()]));
        }
        // Outputs must be positive for every b, s ≥ 1.
        if self.c0 + self.c1 <= 0.0 || self.d0 + self.d1 + self.d2 <= 0.0 {
            return Err(Error::ConfigInvalid(vec!["cost model must yield positive latencies".into()]));
        }
        Ok(())
    }

    pub fn t_ssm(&self, b: usize) -> f64 {
        debug_assert!(b >= 1);
        self.c0 + self.c1 * b as f64
    }

    pub fn t_llm(&self, b: usize, s: usize) -> f64 {
        debug_assert!(b >= 1 && s >= 1);
        let b = b as f64;
        self.d0 + self.d1 * b + self.d2 * b * s as f64
    }

    /// `s` is ignored for [`ModelKind::Ssm`].
    pub fn eval(&self, kind: ModelKind, b: usize, s: usize) -> f64 {
        match kind {
            ModelKind::Ssm => self.t_ssm(b),
            ModelKind::Llm => self.t_llm(b, s),
        }
    }
}
