//! Weighted-majority drafting across several SSMs.
//!
//! Each SSM's draft is one branch of a trie rooted at the request
//! context. A node weighs as much as the SSMs whose drafts pass through
//! it. The voted draft is found by descending to the heaviest child at
//! every level; the SSM owning the resulting branch is the `voted_ssm`.
//! After a verification batch, SSMs whose mean acceptance rate over the
//! drafts they won is high get their weight multiplied by a reward
//! factor; low ones get the punish factor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::types::{ProbDist, RequestId, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SsmId(pub usize);

impl fmt::Display for SsmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ssm{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    weights: Vec<f64>,
    acr_log: Vec<Vec<f64>>,
}

impl WeightTable {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Setup("at least one SSM is required".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::ConfigInvalid(vec!["SSM weights must be > 0".into()]));
        }
        let n = weights.len();
        Ok(Self {
            weights,
            acr_log: vec![Vec::new(); n],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, id: SsmId) -> f64 {
        self.weights[id.0]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Acceptance rates recorded for `id` this round.
    pub fn acr_log(&self, id: SsmId) -> &[f64] {
        &self.acr_log[id.0]
    }

    /// Mean acceptance rate of the drafts `id` won this round, if any.
    pub fn acr(&self, id: SsmId) -> Option<f64> {
        let log = &self.acr_log[id.0];
        if log.is_empty() {
            None
        } else {
            Some(log.iter().sum::<f64>() / log.len() as f64)
        }
    }

    pub fn record_acr(&mut self, voted_ssm: SsmId, acceptance_rate: f64) -> Result<()> {
        if voted_ssm.0 >= self.weights.len() {
            return Err(Error::UnknownSsm(voted_ssm));
        }
        assert!(
            (0.0..=1.0).contains(&acceptance_rate),
            "acceptance rate {acceptance_rate} outside [0, 1]"
        );
        self.acr_log[voted_ssm.0].push(acceptance_rate);
        Ok(())
    }

    /// Applies reward/punish to every SSM with a non-empty log, clamps,
    /// and starts a new round.
    pub fn update_weights(&mut self, cfg: &EngineConfig) {
        for (w, log) in self.weights.iter_mut().zip(&mut self.acr_log) {
            if log.is_empty() {
                continue;
            }
            let acr = log.iter().sum::<f64>() / log.len() as f64;
            if acr >= cfg.reward_threshold {
                *w *= cfg.reward_factor;
            } else if acr <= cfg.punish_threshold {
                *w *= cfg.punish_factor;
            }
            *w = w.clamp(cfg.weight_floor, cfg.weight_cap);
            log.clear();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub token: Option<TokenId>,
    pub weight: f64,
    /// Child node indices, sorted by token.
    pub children: Vec<usize>,
    /// Sorted SSM ids whose draft passes through this node.
    pub contributors: Vec<SsmId>,
}

/// Trie of SSM drafts. Node 0 is the root (the context boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeculationTree {
    nodes: Vec<TreeNode>,
    depth: usize,
}

impl SpeculationTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, idx: usize) -> &TreeNode {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Node reached by following `path` from the root.
    pub fn find(&self, path: &[TokenId]) -> Option<&TreeNode> {
        let mut cur = 0;
        for tok in path {
            cur = *self.nodes[cur]
                .children
                .iter()
                .find(|&&c| self.nodes[c].token == Some(*tok))?;
        }
        Some(&self.nodes[cur])
    }
}

pub fn merge(drafts: &[(SsmId, Vec<TokenId>)], weights: &WeightTable) -> Result<SpeculationTree> {
    let first = drafts.first().ok_or(Error::NoDrafts)?;
    let depth = first.1.len();
    assert!(depth >= 1, "drafts must be non-empty");
    let mut nodes = vec![TreeNode {
        token: None,
        weight: 0.0,
        children: Vec::new(),
        contributors: Vec::new(),
    }];
    for (ssm, seq) in drafts {
        if seq.len() != depth {
            return Err(Error::LengthMismatch {
                expected: depth,
                found: seq.len(),
            });
        }
        if ssm.0 >= weights.len() {
            return Err(Error::UnknownSsm(*ssm));
        }
        let w = weights.weight(*ssm);
        let mut cur = 0;
        add_contributor(&mut nodes[cur], *ssm, w);
        for &tok in seq {
            let pos = nodes[cur]
                .children
                .binary_search_by_key(&Some(tok), |&c| nodes[c].token);
            cur = match pos {
                Ok(i) => nodes[cur].children[i],
                Err(i) => {
                    let idx = nodes.len();
                    nodes.push(TreeNode {
                        token: Some(tok),
                        weight: 0.0,
                        children: Vec::new(),
                        contributors: Vec::new(),
                    });
                    nodes[cur].children.insert(i, idx);
                    idx
                }
            };
            add_contributor(&mut nodes[cur], *ssm, w);
        }
    }
    Ok(SpeculationTree { nodes, depth })
}

fn add_contributor(node: &mut TreeNode, ssm: SsmId, w: f64) {
    if let Err(i) = node.contributors.binary_search(&ssm) {
        node.contributors.insert(i, ssm);
        node.weight += w;
    }
}

/// Root-to-leaf path picked by argmax descent.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityPath {
    pub tokens: Vec<TokenId>,
    pub voted_ssm: SsmId,
}

/// Descends to the heaviest child at every level. Ties go to the smaller
/// token, and the leaf is attributed to its smallest contributing SSM.
pub fn select_path(tree: &SpeculationTree) -> MajorityPath {
    let mut cur = 0;
    let mut tokens = Vec::with_capacity(tree.depth);
    while !tree.nodes[cur].children.is_empty() {
        // Children are sorted by token, so keeping the first maximum breaks
        // ties toward the smaller token.
        let mut best = tree.nodes[cur].children[0];
        for &c in &tree.nodes[cur].children[1..] {
            if tree.nodes[c].weight > tree.nodes[best].weight {
                best = c;
            }
        }
        cur = best;
        tokens.push(tree.nodes[cur].token.expect("only the root is tokenless"));
    }
    MajorityPath {
        tokens,
        voted_ssm: tree.nodes[cur].contributors[0],
    }
}

/// One SSM's draft for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmDraft {
    pub ssm: SsmId,
    pub tokens: Vec<TokenId>,
    pub dists: Vec<ProbDist>,
}

/// The voted draft, queued for verification.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityOutput {
    pub request: RequestId,
    pub tokens: Vec<TokenId>,
    pub dists: Vec<ProbDist>,
    pub voted_ssm: SsmId,
    pub s_used: usize,
}

/// Merges `drafts`, selects the majority path and copies the voted SSM's
/// distributions into the output.
pub fn select_majority(
    request: RequestId,
    drafts: Vec<SsmDraft>,
    weights: &WeightTable,
) -> Result<MajorityOutput> {
    let pairs: Vec<(SsmId, Vec<TokenId>)> = drafts.iter().map(|d| (d.ssm, d.tokens.clone())).collect();
    let tree = merge(&pairs, weights)?;
    let path = select_path(&tree);
    let winner = drafts
        .into_iter()
        .find(|d| d.ssm == path.voted_ssm)
        .expect("voted SSM contributed a draft");
    debug_assert_eq!(winner.tokens, path.tokens);
    Ok(MajorityOutput {
        request,
        s_used: winner.tokens.len(),
        tokens: winner.tokens,
        dists: winner.dists,
        voted_ssm: path.voted_ssm,
    })
}
