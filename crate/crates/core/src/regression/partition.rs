//! Replicate division: balanced row partitions.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Random,
    Contiguous,
}

/// Assignment of `n` rows to `r` disjoint blocks whose sizes differ by at
/// most one. Rows within a block are listed in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    n: usize,
    kind: PartitionKind,
    seed: u64,
    assignment: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Block index of each row.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// Random plans shuffle the row indices (Fisher-Yates) and slice the result;
/// the first `n % r` blocks receive one extra row.
pub fn make_partition(n: usize, r: usize, kind: PartitionKind, seed: u64) -> Result<PartitionPlan> {
    if r == 0 {
        return Err(Error::InvalidArgument("block count r must be positive".into()));
    }
    if r > n {
        return Err(Error::InvalidArgument(format!("block count {r} exceeds row count {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if kind == PartitionKind::Random {
        order.shuffle(&mut stream_rng(seed, 0));
    }
    let (base, extra) = (n / r, n % r);
    let mut blocks = Vec::with_capacity(r);
    let mut assignment = vec![0; n];
    let mut start = 0;
    for k in 0..r {
        let len = base + usize::from(k < extra);
        let mut block = order[start..start + len].to_vec();
        block.sort_unstable();
        for &row in &block {
            assignment[row] = k;
        }
        blocks.push(block);
        start += len;
    }
    Ok(PartitionPlan {
        n,
        kind,
        seed,
        assignment,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contiguous_blocks() {
        let p = make_partition(6, 3, PartitionKind::Contiguous, 0).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(p.assignment(), &[0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn balanced_sizes() {
        let p = make_partition(7, 3, PartitionKind::Contiguous, 0).unwrap();
        assert_eq!(p.sizes(), vec![3, 2, 2]);
        let p = make_partition(7, 3, PartitionKind::Random, 9).unwrap();
        assert_eq!(p.sizes(), vec![3, 2, 2]);
    }

    #[test]
    fn random_is_deterministic_and_covering() {
        let a = make_partition(1000, 10, PartitionKind::Random, 5).unwrap();
        let b = make_partition(1000, 10, PartitionKind::Random, 5).unwrap();
        let c = make_partition(1000, 10, PartitionKind::Random, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.assignment(), c.assignment());
        let mut all: Vec<usize> = a.blocks().iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        for (k, block) in a.blocks().iter().enumerate() {
            assert!(block.windows(2).all(|w| w[0] < w[1]));
            assert!(block.iter().all(|&row| a.assignment()[row] == k));
        }
    }

    #[test]
    fn single_block_is_everything() {
        let p = make_partition(5, 1, PartitionKind::Random, 1).unwrap();
        assert_eq!(p.block(0), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn invalid_counts() {
        assert!(make_partition(3, 0, PartitionKind::Random, 0).is_err());
        assert!(make_partition(3, 4, PartitionKind::Contiguous, 0).is_err());
    }
}
