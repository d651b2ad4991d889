//! Synthetic stand-ins for the draft models and the target model.
//!
//! A [`MarkovOracle`] plays the target model. Drafters are
//! [`PerturbedOracle`]s: a mixture of the target's distribution with a
//! noise distribution, where `fidelity` sets the mixing weight and
//! therefore how often verification accepts the drafter's tokens.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, fnv1a, seeded_rng};
use crate::types::{ProbDist, TokenId};

pub const DEFAULT_MAX_CONTEXT: usize = 4096;

/// Next-token model. Implementations must be deterministic in the context.
pub trait ModelOracle: Send + Sync + fmt::Debug {
    fn vocab_size(&self) -> usize;

    fn next_dist(&self, context: &[TokenId]) -> Result<ProbDist>;
}

impl<T: ModelOracle + ?Sized> ModelOracle for Arc<T> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_dist(&self, context: &[TokenId]) -> Result<ProbDist> {
        (**self).next_dist(context)
    }
}

/// Drafts `s` tokens autoregressively, returning each token together with
/// the distribution it was sampled from.
pub fn draft_sequence<O, R>(
    oracle: &O,
    context: &[TokenId],
    s: usize,
    rng: &mut R,
) -> Result<(Vec<TokenId>, Vec<ProbDist>)>
where
    O: ModelOracle + ?Sized,
    R: Rng + ?Sized,
{
    assert!(s >= 1, "speculation length must be positive");
    let mut ctx = context.to_vec();
    let mut tokens = Vec::with_capacity(s);
    let mut dists = Vec::with_capacity(s);
    for _ in 0..s {
        let dist = oracle.next_dist(&ctx)?;
        let tok = dist.sample(rng);
        ctx.push(tok);
        tokens.push(tok);
        dists.push(dist);
    }
    Ok((tokens, dists))
}

fn check_context(context: &[TokenId], cap: usize) -> Result<()> {
    if context.is_empty() {
        return Err(Error::EmptyContext);
    }
    if context.len() > cap {
        return Err(Error::ContextTooLong {
            len: context.len(),
            cap,
        });
    }
    Ok(())
}

/// Fixed-order Markov chain over an abstract vocabulary.
///
/// Contexts shorter than `order` are left-padded with token 0.
#[derive(Clone)]
pub struct MarkovOracle {
    vocab_size: usize,
    order: usize,
    rows: Vec<Option<ProbDist>>,
    max_context: usize,
}

impl fmt::Debug for MarkovOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkovOracle")
            .field("vocab_size", &self.vocab_size)
            .field("order", &self.order)
            .field("rows", &self.rows.iter().filter(|r| r.is_some()).count())
            .finish()
    }
}

const MAX_ROWS: usize = 1 << 20;

impl MarkovOracle {
    fn empty(vocab_size: usize, order: usize) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::Setup("vocab_size must be positive".into()));
        }
        let n_rows = (0..order)
            .try_fold(1usize, |acc, _| acc.checked_mul(vocab_size))
            .filter(|n| *n <= MAX_ROWS)
            .ok_or_else(|| Error::Setup(format!("vocab {vocab_size}^order {order} rows is too many")))?;
        Ok(Self {
            vocab_size,
            order,
            rows: vec![None; n_rows],
            max_context: DEFAULT_MAX_CONTEXT,
        })
    }

    /// Builds from explicit rows keyed by the last `order` tokens.
    pub fn from_table<I>(vocab_size: usize, order: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<TokenId>, ProbDist)>,
    {
        let mut oracle = Self::empty(vocab_size, order)?;
        for (key, dist) in rows {
            if key.len() != order {
                return Err(Error::Setup(format!("row key {key:?} does not have length {order}")));
            }
            if dist.vocab_size() != vocab_size {
                return Err(Error::DistMismatch {
                    expected: vocab_size,
                    found: dist.vocab_size(),
                });
            }
            let idx = oracle.row_index(&key)?;
            oracle.rows[idx] = Some(dist);
        }
        Ok(oracle)
    }

    /// Random chain with a row for every context. Rows are peaked: entry
    /// weights are `u^sharpness` for uniform `u`. Tokens in `excluded` get
    /// zero probability everywhere.
    pub fn random(
        vocab_size: usize,
        order: usize,
        seed: u64,
        sharpness: f64,
        excluded: &[TokenId],
    ) -> Result<Self> {
        if excluded.len() >= vocab_size {
            return Err(Error::Setup("every token is excluded".into()));
        }
        let mut oracle = Self::empty(vocab_size, order)?;
        let mut rng = seeded_rng(seed, "markov-rows");
        for row in oracle.rows.iter_mut() {
            let weights = (0..vocab_size)
                .map(|i| {
                    let u: f64 = rng.gen();
                    if excluded.contains(&TokenId(i as u32)) {
                        0.0
                    } else {
                        // Strictly positive so every allowed token is reachable.
                        (u.powf(sharpness)).max(1e-12)
                    }
                })
                .collect();
            *row = Some(ProbDist::normalized(weights)?);
        }
        Ok(oracle)
    }

    pub fn with_max_context(mut self, cap: usize) -> Self {
        self.max_context = cap;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn row_index(&self, key: &[TokenId]) -> Result<usize> {
        let mut idx = 0usize;
        for t in key {
            if t.index() >= self.vocab_size {
                return Err(Error::DistMismatch {
                    expected: self.vocab_size,
                    found: t.index() + 1,
                });
            }
            idx = idx * self.vocab_size + t.index();
        }
        Ok(idx)
    }

    fn key(&self, context: &[TokenId]) -> Vec<TokenId> {
        let take = context.len().min(self.order);
        let mut key = vec![TokenId(0); self.order - take];
        key.extend_from_slice(&context[context.len() - take..]);
        key
    }
}

impl ModelOracle for MarkovOracle {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_dist(&self, context: &[TokenId]) -> Result<ProbDist> {
        check_context(context, self.max_context)?;
        let key = self.key(context);
        let idx = self.row_index(&key)?;
        self.rows[idx]
            .clone()
            .ok_or_else(|| Error::UnknownContext(key.iter().map(|t| t.0).collect()))
    }
}

/// Where a [`PerturbedOracle`] takes its noise from.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// A peaked random distribution derived from a hash of the context.
    Hashed { seed: u64, sharpness: f64 },
    /// All noise mass on one token. When the base never emits that token
    /// the per-token acceptance probability is exactly the fidelity.
    Reserved(TokenId),
}

#[derive(Debug, Clone)]
pub struct PerturbedOracle {
    base: Arc<dyn ModelOracle>,
    fidelity: f64,
    noise: Noise,
}

impl PerturbedOracle {
    pub fn new(base: Arc<dyn ModelOracle>, fidelity: f64, noise: Noise) -> Result<Self> {
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(Error::Setup(format!("fidelity {fidelity} outside [0, 1]")));
        }
        match &noise {
            Noise::Reserved(t) if t.index() >= base.vocab_size() => {
                return Err(Error::Setup(format!("reserved token {t} outside vocabulary")));
            }
            Noise::Hashed { sharpness, .. } if !(*sharpness >= 0.0) => {
                return Err(Error::Setup("noise sharpness must be non-negative".into()));
            }
            _ => {}
        }
        Ok(Self { base, fidelity, noise })
    }

    pub fn hashed(base: Arc<dyn ModelOracle>, fidelity: f64, seed: u64) -> Result<Self> {
        Self::new(base, fidelity, Noise::Hashed { seed, sharpness: 3.0 })
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    /// The distribution mixed in with weight `1 - fidelity`.
    pub fn noise_dist(&self, context: &[TokenId]) -> Result<ProbDist> {
        let vocab = self.base.vocab_size();
        match self.noise {
            Noise::Reserved(t) => Ok(ProbDist::delta(vocab, t)),
            Noise::Hashed { seed, sharpness } => {
                let bytes: Vec<u8> = context.iter().flat_map(|t| t.0.to_le_bytes()).collect();
                let mut rng = seeded_rng(derive_seed(seed, fnv1a(&bytes)), "noise");
                let weights = (0..vocab)
                    .map(|_| rng.gen::<f64>().powf(sharpness).max(1e-12))
                    .collect();
                ProbDist::normalized(weights)
            }
        }
    }
}

impl ModelOracle for PerturbedOracle {
    fn vocab_size(&self) -> usize {
        self.base.vocab_size()
    }

    fn next_dist(&self, context: &[TokenId]) -> Result<ProbDist> {
        let base = self.base.next_dist(context)?;
        if self.fidelity == 1.0 {
            return Ok(base);
        }
        let noise = self.noise_dist(context)?;
        let f = self.fidelity;
        let mixed = base
            .probs()
            .iter()
            .zip(noise.probs())
            .map(|(b, n)| f * b + (1.0 - f) * n)
            .collect();
        ProbDist::normalized(mixed)
    }
}
