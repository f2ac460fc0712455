//! Bipartitions of the inputs and their enumeration.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::IndexPartition;

/// Largest `n` for which balanced partitions may be enumerated exhaustively.
pub const ENUMERATION_CAP: usize = 28;

/// A split of inputs `0..n` into `A` and its complement `B`. Zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InputPartition {
    a: Vec<usize>,
    n: usize,
}

impl InputPartition {
    /// `a` is sorted and deduplicated; it must be a non-empty proper subset of `0..n`.
    pub fn new(mut a: Vec<usize>, n: usize) -> Result<Self> {
        a.sort_unstable();
        let len = a.len();
        a.dedup();
        if a.len() != len {
            return Err(Error::Partition("duplicated input in A".into()));
        }
        if let Some(&bad) = a.iter().find(|&&i| i >= n) {
            return Err(Error::Partition(format!("input {bad} out of range 0..{n}")));
        }
        if a.is_empty() || a.len() == n {
            return Err(Error::Partition("both sides of a partition must be non-empty".into()));
        }
        Ok(Self { a, n })
    }

    /// Parses a comma-separated, one-based list such as `1,3,5,7`.
    pub fn parse_one_based(s: &str, n: usize) -> Result<Self> {
        let a = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .ok()
                    .filter(|&i| i >= 1)
                    .map(|i| i - 1)
                    .ok_or_else(|| Error::Partition(format!("bad input index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(a, n)
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn b(&self) -> Vec<usize> {
        (0..self.n).filter(|i| self.a.binary_search(i).is_err()).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.a.binary_search(&i).is_ok()
    }

    pub fn is_canonical(&self) -> bool {
        self.a.first() == Some(&0)
    }

    /// The same split with input 0 on the `A` side.
    pub fn canonical(self) -> Self {
        if self.is_canonical() {
            self
        } else {
            Self { a: self.b(), n: self.n }
        }
    }

    pub fn to_index_partition(&self) -> IndexPartition {
        IndexPartition::new(self.a.clone(), self.b()).expect("disjoint by construction")
    }

    /// `n` characters, `'1'` where input `i` is in `A`.
    pub fn mask(&self) -> String {
        (0..self.n).map(|i| if self.contains(i) { '1' } else { '0' }).collect()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.a.iter().map(|i| i + 1).collect()
    }

    pub fn left_right(n: usize) -> Result<Self> {
        Self::new((0..n / 2).collect(), n)
    }

    /// Alternating positions along the input order.
    pub fn interleaved(n: usize) -> Result<Self> {
        Self::new((0..n).step_by(2).collect(), n)
    }

    /// Contiguous runs of length `xi`, alternating between `A` and `B`.
    pub fn segments(n: usize, xi: usize) -> Result<Self> {
        if xi == 0 {
            return Err(Error::Partition("segment length must be positive".into()));
        }
        Self::new((0..n).filter(|i| (i / xi) % 2 == 0).collect(), n)
    }

    /// Checkerboard colouring of a `2^L x 2^L` image whose patches are listed in
    /// depth-first order of a 2x2 quad-tree (`n = 4^L`).
    pub fn checkerboard_quadtree(n: usize) -> Result<Self> {
        let mut side = 1usize;
        while side * side < n {
            side *= 2;
        }
        if side * side != n || n < 4 {
            return Err(Error::Partition(format!("{n} is not a power of 4 (>= 4)")));
        }
        let a = (0..n)
            .filter(|&i| {
                let (r, c) = morton_decode(i);
                (r + c) % 2 == 0
            })
            .collect();
        Self::new(a, n)
    }
}

/// Quad-tree leaf index to (row, col): base-4 digits, most significant first,
/// each digit `t` placing the patch at offset `(t / 2, t % 2)` in its window.
fn morton_decode(mut i: usize) -> (usize, usize) {
    let (mut r, mut c, mut scale) = (0, 0, 1);
    while i > 0 {
        let t = i % 4;
        r += (t / 2) * scale;
        c += (t % 2) * scale;
        scale *= 2;
        i /= 4;
    }
    (r, c)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of canonical balanced partitions of `n` inputs: `C(n, n/2) / 2`.
pub fn balanced_count(n: usize) -> Result<u128> {
    check_balanced(n)?;
    Ok(binomial(n - 1, n / 2 - 1))
}

fn check_balanced(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Partition(format!("balanced partitions need an even n >= 2, got {n}")));
    }
    Ok(())
}

/// All balanced partitions with input 0 in `A`, ordered lexicographically by `A`.
pub fn enumerate_balanced_partitions(n: usize) -> Result<Vec<InputPartition>> {
    check_balanced(n)?;
    if n > ENUMERATION_CAP {
        return Err(Error::Config(format!(
            "n = {n} exceeds the enumeration cap of {ENUMERATION_CAP}; use sampling mode"
        )));
    }
    let total = balanced_count(n)?;
    (0..total).map(|r| unrank_balanced(n, r)).collect()
}

/// Lexicographic rank of a canonical balanced partition.
pub fn rank_balanced(p: &InputPartition) -> Result<u128> {
    let n = p.n();
    check_balanced(n)?;
    if !p.is_canonical() || p.a().len() != n / 2 {
        return Err(Error::Partition("not a canonical balanced partition".into()));
    }
    // A = {0} ∪ S with S a (k)-subset of 1..n, ranked in lexicographic order
    let k = n / 2 - 1;
    let mut rank = 0u128;
    let mut prev = 0usize;
    for (t, &x) in p.a()[1..].iter().enumerate() {
        for skipped in prev + 1..x {
            rank += binomial(n - 1 - skipped, k - t - 1);
        }
        prev = x;
    }
    Ok(rank)
}

pub fn unrank_balanced(n: usize, mut rank: u128) -> Result<InputPartition> {
    let total = balanced_count(n)?;
    if rank >= total {
        return Err(Error::Partition(format!("rank {rank} out of range ({total} partitions)")));
    }
    let k = n / 2 - 1;
    let mut a = vec![0usize];
    let mut x = 1usize;
    for t in 0..k {
        loop {
            let block = binomial(n - 1 - x, k - t - 1);
            if rank < block {
                break;
            }
            rank -= block;
            x += 1;
        }
        a.push(x);
        x += 1;
    }
    InputPartition::new(a, n)
}

/// `count` distinct integers below `total`, sorted, drawn deterministically from `seed`.
/// Returns all of `0..total` when `count >= total`.
pub fn sample_ids(total: u128, count: usize, seed: u64) -> Vec<u128> {
    if count as u128 >= total {
        return (0..total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Floyd's algorithm: exactly `count` draws, no rejection loop
    let mut chosen = BTreeSet::new();
    for j in total - count as u128..total {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}

/// Sampled canonical balanced partitions with their ranks, in rank order.
pub fn sample_balanced_partitions(n: usize, count: usize, seed: u64) -> Result<Vec<(u128, InputPartition)>> {
    let total = balanced_count(n)?;
    sample_ids(total, count, seed)
        .into_iter()
        .map(|r| Ok((r, unrank_balanced(n, r)?)))
        .collect()
}
