//! Tokens, probability distributions and the request lifecycle.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`ProbDist`].
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

/// A categorical distribution over a vocabulary `0..len`.
///
/// Construction never renormalizes silently: [`ProbDist::new`] rejects
/// vectors whose mass is off by more than [`MASS_TOLERANCE`], and
/// [`ProbDist::normalized`] is the explicit opt-in.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDist(format!("mass {total} is not 1")));
        }
        Ok(Self { probs })
    }

    /// Scales non-negative weights to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        check_entries(&weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDist(format!("cannot normalize mass {total}")));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// All mass on `token`.
    pub fn delta(vocab_size: usize, token: TokenId) -> Self {
        assert!(token.index() < vocab_size, "token {token} outside vocab {vocab_size}");
        let mut probs = vec![0.0; vocab_size];
        probs[token.index()] = 1.0;
        Self { probs }
    }

    pub fn uniform(vocab_size: usize) -> Self {
        assert!(vocab_size > 0);
        Self {
            probs: vec![1.0 / vocab_size as f64; vocab_size],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs[token.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF sample using a single uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TokenId {
        let u: f64 = rng.gen();
        self.sample_with(u)
    }

    /// Inverse-CDF lookup of `u ∈ [0, 1)`.
    pub fn sample_with(&self, u: f64) -> TokenId {
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_nonzero = i;
                if u < acc {
                    return TokenId(i as u32);
                }
            }
        }
        // Rounding can leave the cumulative sum a hair below u.
        TokenId(last_nonzero as u32)
    }

    pub fn total_variation(&self, other: &ProbDist) -> f64 {
        assert_eq!(self.vocab_size(), other.vocab_size());
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn check_entries(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDist("empty vocabulary".into()));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::InvalidDist(format!("entry {i} is {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestState {
    Pending,
    Drafting,
    AwaitingVerification,
    Running,
    Finished,
}

impl RequestState {
    /// Allowed lifecycle edges.
    ///
    /// `Pending -> Finished` only admits requests whose token budget is
    /// already spent when they enter the engine.
    pub fn can_transition(self, to: RequestState) -> bool {
        use RequestState::*;
        matches!(
            (self, to),
            (Pending, Drafting)
                | (Pending, Finished)
                | (Drafting, AwaitingVerification)
                | (AwaitingVerification, Running)
                | (AwaitingVerification, Finished)
                | (Running, Drafting)
        )
    }
}

/// Replays a transition log and returns the first illegal edge, if any.
pub fn first_illegal_edge(
    log: &[(RequestId, RequestState, RequestState)],
) -> Option<(RequestId, RequestState, RequestState)> {
    log.iter().copied().find(|(_, from, to)| !from.can_transition(*to))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: RequestId,
    pub prompt: Vec<TokenId>,
    pub generated: Vec<TokenId>,
    pub max_new_tokens: usize,
    state: RequestState,
}

impl Request {
    pub fn new(id: RequestId, prompt: Vec<TokenId>, max_new_tokens: usize) -> Self {
        assert!(max_new_tokens > 0, "max_new_tokens must be positive");
        Self {
            id,
            prompt,
            generated: Vec::new(),
            max_new_tokens,
            state: RequestState::Pending,
        }
    }

    pub fn state(&self) -> RequestState {
        self.state
    }

    pub fn transition(&mut self, to: RequestState) -> Result<()> {
        if !self.state.can_transition(to) {
            return Err(Error::IllegalTransition {
                id: self.id,
                from: self.state,
                to,
            });
        }
        self.state = to;
        Ok(())
    }

    /// Prompt followed by generated tokens.
    pub fn context(&self) -> Vec<TokenId> {
        let mut ctx = Vec::with_capacity(self.prompt.len() + self.generated.len());
        ctx.extend_from_slice(&self.prompt);
        ctx.extend_from_slice(&self.generated);
        ctx
    }

    pub fn remaining(&self) -> usize {
        self.max_new_tokens - self.generated.len()
    }

    /// Appends at most `remaining()` tokens, stopping after `stop` if seen.
    /// Returns how many were kept and whether the request is now complete.
    pub fn extend_generated(&mut self, tokens: &[TokenId], stop: Option<TokenId>) -> (usize, bool) {
        let mut kept = 0;
        let mut stopped = false;
        for &t in tokens.iter().take(self.remaining()) {
            self.generated.push(t);
            kept += 1;
            if Some(t) == stop {
                stopped = true;
                break;
            }
        }
        (kept, stopped || self.remaining() == 0)
    }
}
