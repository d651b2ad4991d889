//! Speculative-sampling verification.
//!
//! Draft token `x_i` is kept when `q_i(x_i) ≤ o_i(x_i)`, otherwise with
//! probability `o_i(x_i) / q_i(x_i)`. The first rejected position is
//! replaced by a sample from `norm(max(0, o_i − q_i))` and everything
//! after it is discarded. If all `s` tokens survive, one bonus token is
//! drawn from `o_{s+1}`. The emitted tokens are distributed exactly as if
//! they had been sampled from the target model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ProbDist, TokenId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub accepted_count: usize,
    /// Accepted prefix followed by exactly one corrected or bonus token.
    pub emitted: Vec<TokenId>,
    pub acceptance_rate: f64,
}

pub fn acceptance_rate(result: &VerificationResult, s: usize) -> f64 {
    result.accepted_count as f64 / s as f64
}

/// Verifies `draft_tokens` against the target distributions.
///
/// One uniform is consumed per examined position, in order, whether or
/// not the position needed the rejection test. Residual and bonus
/// sampling draw after that.
pub fn verify<R: Rng + ?Sized>(
    draft_tokens: &[TokenId],
    draft_dists: &[ProbDist],
    target_dists: &[ProbDist],
    rng: &mut R,
) -> Result<VerificationResult> {
    let s = draft_tokens.len();
    assert!(s >= 1, "nothing to verify");
    if draft_dists.len() != s {
        return Err(Error::LengthMismatch {
            expected: s,
            found: draft_dists.len(),
        });
    }
    if target_dists.len() != s + 1 {
        return Err(Error::LengthMismatch {
            expected: s + 1,
            found: target_dists.len(),
        });
    }
    let vocab = target_dists[0].vocab_size();
    for d in draft_dists.iter().chain(target_dists) {
        if d.vocab_size() != vocab {
            return Err(Error::DistMismatch {
                expected: vocab,
                found: d.vocab_size(),
            });
        }
    }

    let mut emitted = Vec::with_capacity(s + 1);
    for (i, &x) in draft_tokens.iter().enumerate() {
        let q = draft_dists[i].prob(x);
        let o = target_dists[i].prob(x);
        let u: f64 = rng.gen();
        // u < o/q, written without the division.
        if q <= o || u * q < o {
            emitted.push(x);
            continue;
        }
        emitted.push(sample_residual(&target_dists[i], &draft_dists[i], rng));
        return Ok(VerificationResult {
            accepted_count: i,
            emitted,
            acceptance_rate: i as f64 / s as f64,
        });
    }
    emitted.push(target_dists[s].sample(rng));
    Ok(VerificationResult {
        accepted_count: s,
        emitted,
        acceptance_rate: 1.0,
    })
}

/// Samples from `norm(max(0, o − q))`, falling back to `o` when the
/// residual has no mass (only reachable through rounding).
fn sample_residual<R: Rng + ?Sized>(target: &ProbDist, draft: &ProbDist, rng: &mut R) -> TokenId {
    let residual: Vec<f64> = target
        .probs()
        .iter()
        .zip(draft.probs())
        .map(|(o, q)| (o - q).max(0.0))
        .collect();
    match ProbDist::normalized(residual) {
        Ok(d) => d.sample(rng),
        Err(_) => target.sample(rng),
    }
}
