//! Drafting and verification work units shared by the simulated and
//! threaded runners. Each side owns its own per-request random streams,
//! so the tokens a request produces do not depend on scheduling.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Result;
use crate::oracle::{draft_sequence, ModelOracle};
use crate::rng::{seeded_rng, StreamRng};
use crate::types::{RequestId, TokenId};
use crate::verify::{verify, VerificationResult};
use crate::voter::{select_majority, MajorityOutput, SsmDraft, SsmId, WeightTable};

/// A voted draft waiting in the intermediate pool, with the context it
/// was drafted from.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub output: MajorityOutput,
    pub context: Arc<[TokenId]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verified {
    pub request: RequestId,
    pub voted_ssm: SsmId,
    pub s_used: usize,
    pub result: VerificationResult,
}

pub struct Drafter {
    ssms: Vec<Arc<dyn ModelOracle>>,
    seed: u64,
    majority: bool,
    streams: HashMap<(RequestId, SsmId), StreamRng>,
}

impl Drafter {
    pub fn new(ssms: Vec<Arc<dyn ModelOracle>>, seed: u64, majority: bool) -> Self {
        Self {
            ssms,
            seed,
            majority,
            streams: HashMap::new(),
        }
    }

    fn active(&self) -> usize {
        if self.majority {
            self.ssms.len()
        } else {
            1
        }
    }

    /// Drafts `s` tokens for every request with each active SSM and votes.
    pub fn draft(
        &mut self,
        batch: &[(RequestId, Arc<[TokenId]>)],
        s: usize,
        weights: &WeightTable,
    ) -> Result<Vec<PoolEntry>> {
        let mut out = Vec::with_capacity(batch.len());
        for (rid, ctx) in batch {
            let mut drafts = Vec::with_capacity(self.active());
            for i in 0..self.active() {
                let ssm = SsmId(i);
                let seed = self.seed;
                let rng = self
                    .streams
                    .entry((*rid, ssm))
                    .or_insert_with(|| seeded_rng(seed, &format!("draft/{}/{}", rid.0, i)));
                let (tokens, dists) = draft_sequence(&*self.ssms[i], ctx, s, rng)?;
                drafts.push(SsmDraft { ssm, tokens, dists });
            }
            out.push(PoolEntry {
                output: select_majority(*rid, drafts, weights)?,
                context: ctx.clone(),
            });
        }
        Ok(out)
    }

    pub fn forget(&mut self, rid: RequestId) {
        self.streams.retain(|(r, _), _| *r != rid);
    }
}

pub struct Verifier {
    llm: Arc<dyn ModelOracle>,
    seed: u64,
    streams: HashMap<RequestId, StreamRng>,
}

impl Verifier {
    pub fn new(llm: Arc<dyn ModelOracle>, seed: u64) -> Self {
        Self {
            llm,
            seed,
            streams: HashMap::new(),
        }
    }

    pub fn verify_batch(&mut self, batch: &[PoolEntry]) -> Result<Vec<Verified>> {
        batch.iter().map(|e| self.verify_one(e)).collect()
    }

    fn verify_one(&mut self, entry: &PoolEntry) -> Result<Verified> {
        let out = &entry.output;
        let mut ctx = entry.context.to_vec();
        let mut target = Vec::with_capacity(out.tokens.len() + 1);
        target.push(self.llm.next_dist(&ctx)?);
        for &tok in &out.tokens {
            ctx.push(tok);
            target.push(self.llm.next_dist(&ctx)?);
        }
        let seed = self.seed;
        let rng = self
            .streams
            .entry(out.request)
            .or_insert_with(|| seeded_rng(seed, &format!("verify/{}", out.request.0)));
        let result = verify(&out.tokens, &out.dists, &target, rng)?;
        Ok(Verified {
            request: out.request,
            voted_ssm: out.voted_ssm,
            s_used: out.s_used,
            result,
        })
    }

    pub fn forget(&mut self, rid: RequestId) {
        self.streams.remove(&rid);
    }
}
