//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "hetero"
//! mode = "pipelined"          # or "sequential"
//! out = "results"             # directory for tables and traces
//! format = "csv"              # or "text"
//!
//! [engine]                    # any EngineConfig field; omitted ones keep defaults
//! seed = 7
//! b_llm = 8
//!
//! [llm]
//! seed = 1
//! order = 1
//! sharpness = 2.0
//! exclude = []                # tokens the target never emits
//!
//! [[ssm]]
//! fidelity = 0.8
//! seed = 11                   # hashed noise
//! # reserved = 31             # or: all noise on one token
//!
//! [cost]
//! c0 = 1.0
//! c1 = 0.1
//! d0 = 10.0
//! d1 = 1.0
//! d2 = 0.5
//!
//! [workload]
//! requests = 32
//! prompt_len = [4, 16]
//! max_new_tokens = 128
//!
//! [sweep]
//! axis = "s"                  # none | s | batch | ablation
//! s_range = [1, 12]
//! # batch = [1, 2, 4, 8]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use aggspec_core::engine::{Mode, Oracles};
use aggspec_core::oracle::Noise;
use aggspec_core::rng::seeded_rng;
use aggspec_core::{
    validate_config, CostModel, EngineConfig, MarkovOracle, ModelOracle, PerturbedOracle, Request, RequestId,
    TokenId,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSpec {
    pub seed: u64,
    pub order: usize,
    pub sharpness: f64,
    pub exclude: Vec<u32>,
}

impl Default for LlmSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            order: 1,
            sharpness: 2.0,
            exclude: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmSpec {
    pub fidelity: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_noise_sharpness")]
    pub sharpness: f64,
    #[serde(default)]
    pub reserved: Option<u32>,
}

fn default_noise_sharpness() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Workload {
    pub requests: usize,
    /// Inclusive range the prompt lengths are drawn from.
    pub prompt_len: [usize; 2],
    pub max_new_tokens: usize,
}

impl Default for Workload {
    fn default() -> Self {
        Self {
            requests: 16,
            prompt_len: [4, 16],
            max_new_tokens: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    None,
    S,
    Batch,
    Ablation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    /// Inclusive.
    pub s_range: Option<[usize; 2]>,
    pub batch: Vec<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: Axis::None,
            s_range: None,
            batch: Vec::new(),
        }
    }
}

/// The four cumulative stages of an ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// First SSM only, fixed `s`, sequential.
    Default,
    Majority,
    Selector,
    Pipeline,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Default, Stage::Majority, Stage::Selector, Stage::Pipeline];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Default => "default",
            Stage::Majority => "+majority",
            Stage::Selector => "+selector",
            Stage::Pipeline => "+pipeline",
        }
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepValue {
    None,
    S(usize),
    Batch(usize),
    Stage(Stage),
}

impl SweepValue {
    /// Mixed into the base seed to give each cell its own streams.
    pub fn seed_key(self) -> u64 {
        match self {
            SweepValue::None => 0,
            SweepValue::S(s) => s as u64,
            SweepValue::Batch(b) => b as u64,
            SweepValue::Stage(st) => Stage::ALL.iter().position(|x| *x == st).unwrap() as u64,
        }
    }

    /// File-name friendly tag.
    pub fn slug(self) -> String {
        match self {
            SweepValue::None => "run".into(),
            SweepValue::S(s) => format!("s{s}"),
            SweepValue::Batch(b) => format!("b{b}"),
            SweepValue::Stage(st) => st.label().trim_start_matches('+').into(),
        }
    }
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::None => f.write_str("-"),
            SweepValue::S(s) => write!(f, "s={s}"),
            SweepValue::Batch(b) => write!(f, "b={b}"),
            SweepValue::Stage(st) => f.write_str(st.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub llm: LlmSpec,
    #[serde(default)]
    pub ssm: Vec<SsmSpec>,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub workload: Workload,
    #[serde(default)]
    pub sweep: SweepSpec,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_mode() -> Mode {
    Mode::Pipelined
}

fn default_out() -> PathBuf {
    "results".into()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(BenchError::io(path))?;
    parse_scenario(&text, path)
}

/// Parses and validates scenario text; `origin` only labels errors.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| BenchError::Parse {
        path: origin.to_path_buf(),
        line: e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0),
        message: e.message().to_string(),
    })?;
    scenario.validate()
}

impl Scenario {
    /// Checks everything the engine would only catch mid-run.
    pub fn validate(mut self) -> Result<Self> {
        self.engine = validate_config(self.engine)?;
        let vocab = self.engine.vocab_size;
        let mut problems = Vec::new();
        if self.ssm.is_empty() {
            problems.push("at least one [[ssm]] is required".to_string());
        }
        for (i, ssm) in self.ssm.iter().enumerate() {
            if !(0.0..=1.0).contains(&ssm.fidelity) {
                problems.push(format!("ssm {i}: fidelity must lie in [0, 1]"));
            }
            if !(ssm.sharpness >= 0.0) {
                problems.push(format!("ssm {i}: sharpness must be ≥ 0"));
            }
            if ssm.reserved.is_some_and(|t| t as usize >= vocab) {
                problems.push(format!("ssm {i}: reserved token outside vocabulary"));
            }
        }
        if self.llm.order == 0 {
            problems.push("llm.order must be ≥ 1".into());
        }
        if self.llm.exclude.iter().any(|&t| t as usize >= vocab) {
            problems.push("llm.exclude names a token outside the vocabulary".into());
        }
        if self.llm.exclude.len() >= vocab {
            problems.push("llm.exclude removes every token".into());
        }
        let w = &self.workload;
        if w.requests == 0 {
            problems.push("workload.requests must be ≥ 1".into());
        }
        if w.prompt_len[0] == 0 || w.prompt_len[0] > w.prompt_len[1] {
            problems.push("workload.prompt_len must be [lo, hi] with 1 ≤ lo ≤ hi".into());
        }
        if w.max_new_tokens == 0 {
            problems.push("workload.max_new_tokens must be ≥ 1".into());
        }
        match self.sweep.axis {
            Axis::S => match self.sweep.s_range {
                Some([lo, hi]) if lo >= 1 && lo <= hi => {}
                Some(_) => problems.push("sweep.s_range must be [lo, hi] with 1 ≤ lo ≤ hi".into()),
                None => problems.push("sweep axis `s` needs sweep.s_range".into()),
            },
            Axis::Batch => {
                if self.sweep.batch.is_empty() || self.sweep.batch.contains(&0) {
                    problems.push("sweep axis `batch` needs non-empty sweep.batch with values ≥ 1".into());
                }
            }
            Axis::None | Axis::Ablation => {}
        }
        if let Err(aggspec_core::Error::Setup(msg)) = self.cost.validate() {
            problems.push(msg);
        }
        if let Err(e) = self.engine.weights_for(self.ssm.len()) {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(BenchError::Invalid(problems.join("; ")))
        }
    }

    pub fn sweep_values(&self) -> Vec<SweepValue> {
        match self.sweep.axis {
            Axis::None => vec![SweepValue::None],
            Axis::S => {
                let [lo, hi] = self.sweep.s_range.unwrap_or([self.engine.s_init; 2]);
                (lo..=hi).map(SweepValue::S).collect()
            }
            Axis::Batch => self.sweep.batch.iter().map(|&b| SweepValue::Batch(b)).collect(),
            Axis::Ablation => Stage::ALL.iter().map(|&st| SweepValue::Stage(st)).collect(),
        }
    }

    /// Engine config and mode for one cell. The cell's seed is set by the
    /// caller.
    pub fn cell_config(&self, value: SweepValue) -> (EngineConfig, Mode) {
        let mut cfg = self.engine.clone();
        let mut mode = self.mode;
        match value {
            SweepValue::None => {}
            SweepValue::S(s) => {
                cfg.s_init = s;
                cfg.s_min = cfg.s_min.min(s);
                cfg.s_max = cfg.s_max.max(s);
                cfg.adaptive_s = false;
            }
            SweepValue::Batch(b) => {
                cfg.b_llm = b;
                cfg.b_ssm = b;
            }
            SweepValue::Stage(stage) => {
                cfg.majority = stage != Stage::Default;
                cfg.adaptive_s = matches!(stage, Stage::Selector | Stage::Pipeline);
                mode = if stage == Stage::Pipeline {
                    Mode::Pipelined
                } else {
                    Mode::Sequential
                };
            }
        }
        (cfg, mode)
    }

    pub fn build_oracles(&self) -> Result<Oracles> {
        let vocab = self.engine.vocab_size;
        let exclude: Vec<TokenId> = self.llm.exclude.iter().map(|&t| TokenId(t)).collect();
        let llm: Arc<dyn ModelOracle> = Arc::new(MarkovOracle::random(
            vocab,
            self.llm.order,
            self.llm.seed,
            self.llm.sharpness,
            &exclude,
        )?);
        let ssms = self
            .ssm
            .iter()
            .map(|spec| {
                let noise = match spec.reserved {
                    Some(t) => Noise::Reserved(TokenId(t)),
                    None => Noise::Hashed {
                        seed: spec.seed,
                        sharpness: spec.sharpness,
                    },
                };
                Ok(Arc::new(PerturbedOracle::new(llm.clone(), spec.fidelity, noise)?) as Arc<dyn ModelOracle>)
            })
            .collect::<Result<_>>()?;
        Ok(Oracles { llm, ssms })
    }

    /// Prompts are drawn from the scenario seed alone, so every cell of a
    /// sweep serves the same workload.
    pub fn build_requests(&self) -> Vec<Request> {
        let mut rng = seeded_rng(self.engine.seed, "workload");
        let allowed: Vec<u32> = (0..self.engine.vocab_size as u32)
            .filter(|t| !self.llm.exclude.contains(t))
            .collect();
        let [lo, hi] = self.workload.prompt_len;
        (0..self.workload.requests)
            .map(|i| {
                let len = rng.gen_range(lo..=hi);
                let prompt = (0..len)
                    .map(|_| TokenId(allowed[rng.gen_range(0..allowed.len())]))
                    .collect();
                Request::new(RequestId(i as u32), prompt, self.workload.max_new_tokens)
            })
            .collect()
    }
}
