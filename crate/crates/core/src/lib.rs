//! Speculative decoding with several draft models.
//!
//! Drafts from a set of small models are merged into a weighted trie and
//! the majority path is verified by the target model with the standard
//! speculative-sampling rule. Draft-model weights adapt to how well each
//! model's winning drafts verify, the speculation length adapts to the
//! observed per-token verification cost, and drafting runs ahead of
//! verification through a bounded intermediate pool.
//!
//! Models are synthetic ([`oracle`]) and latency comes from a parametric
//! [`cost::CostModel`], so runs can be simulated deterministically
//! ([`engine::SimEngine`]) or executed on real threads
//! ([`engine::real::run_threaded`]).

pub mod config;
pub mod cost;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod rng;
pub mod selector;
pub mod types;
pub mod verify;
pub mod voter;

pub use config::{validate_config, EngineConfig};
pub use cost::{CostModel, ModelKind};
pub use error::{Error, Result};
pub use oracle::{draft_sequence, MarkovOracle, ModelOracle, Noise, PerturbedOracle};
pub use rng::seeded_rng;
pub use types::{ProbDist, Request, RequestId, RequestState, TokenId};
