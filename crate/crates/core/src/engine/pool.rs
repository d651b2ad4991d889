use std::collections::VecDeque;

use super::work::PoolEntry;

/// FIFO of voted drafts between the drafting and verification stages.
///
/// Drafting may only start a new round while fewer than `b_llm` entries
/// are queued, so the depth never exceeds `b_llm + b_ssm - 1`.
#[derive(Debug, Clone, Default)]
pub struct IntermediatePool {
    queue: VecDeque<PoolEntry>,
    b_llm: usize,
    max_depth: usize,
}

impl IntermediatePool {
    pub fn new(b_llm: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            b_llm,
            max_depth: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Deepest the queue has been.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn accepts_drafting(&self) -> bool {
        self.queue.len() < self.b_llm
    }

    pub fn push_all(&mut self, entries: impl IntoIterator<Item = PoolEntry>) {
        self.queue.extend(entries);
        self.max_depth = self.max_depth.max(self.queue.len());
    }

    /// Removes up to `b_llm` entries from the front.
    pub fn take_batch(&mut self) -> Vec<PoolEntry> {
        let n = self.queue.len().min(self.b_llm);
        self.queue.drain(..n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{RequestId, TokenId};
    use crate::voter::{MajorityOutput, SsmId};

    fn entry(id: u32) -> PoolEntry {
        PoolEntry {
            output: MajorityOutput {
                request: RequestId(id),
                tokens: vec![TokenId(0)],
                dists: vec![],
                voted_ssm: SsmId(0),
                s_used: 1,
            },
            context: vec![TokenId(0)].into(),
        }
    }

    #[test]
    fn fifo_batches_and_throttle() {
        let mut pool = IntermediatePool::new(2);
        assert!(pool.accepts_drafting());
        pool.push_all((0..3).map(entry));
        assert!(!pool.accepts_drafting());
        assert_eq!(pool.max_depth(), 3);
        let ids: Vec<_> = pool.take_batch().iter().map(|e| e.output.request.0).collect();
        assert_eq!(ids, vec![0, 1]);
        assert!(pool.accepts_drafting());
        assert_eq!(pool.take_batch()[0].output.request, RequestId(2));
        assert!(pool.take_batch().is_empty());
    }
}
