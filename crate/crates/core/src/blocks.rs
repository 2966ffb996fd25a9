//! Relevant-pair classification, block detection and the `m`-from-`l`
//! schedule that fixes the construction region for each block-wise position.

use thiserror::Error;

use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("left-allocated count {l} is out of range for width {n}")]
    CountOutOfRange { l: u64, n: u32 },
}

/// How the two members of a relevant pair `⟨2j, 2j+1⟩` sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    /// Both members at columns of their own parity.
    Normal,
    /// Both members at columns of the opposite parity.
    Inverted,
    Interrupting,
}

/// Counts of row numbers (two per pair) in each class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PositionCounts {
    pub normal: usize,
    pub inverted: usize,
    pub interrupting: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKind {
    /// `r_{2i+1} - r_{2i} = 1`
    Even,
    /// `r_{2i+1} - r_{2i} = -1`
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockFilter {
    Even,
    Odd,
    Any,
}

impl BlockFilter {
    fn accepts(self, kind: BlockKind) -> bool {
        match self {
            BlockFilter::Any => true,
            BlockFilter::Even => kind == BlockKind::Even,
            BlockFilter::Odd => kind == BlockKind::Odd,
        }
    }
}

impl From<BlockKind> for BlockFilter {
    fn from(kind: BlockKind) -> Self {
        match kind {
            BlockKind::Even => BlockFilter::Even,
            BlockKind::Odd => BlockFilter::Odd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockList {
    pub entries: Vec<(usize, BlockKind)>,
}

impl BlockList {
    pub fn positions(&self, filter: BlockFilter) -> Vec<usize> {
        self.entries.iter().filter(|(_, k)| filter.accepts(*k)).map(|(i, _)| *i).collect()
    }

    /// Length of the longest prefix `0..l` of positions all holding blocks
    /// accepted by `filter`.
    pub fn left_allocated(&self, filter: BlockFilter) -> usize {
        self.entries.iter().enumerate().take_while(|(k, (i, kind))| *k == *i && filter.accepts(*kind)).count()
    }
}

#[inline]
fn matched(row: u32, col: u32) -> bool {
    (row ^ col) & 1 == 0
}

/// Class of relevant pair `⟨2j, 2j+1⟩`.
pub fn pair_class(perm: &Permutation, j: u32) -> PairClass {
    let lo = matched(2 * j, perm.column_of(2 * j));
    let hi = matched(2 * j + 1, perm.column_of(2 * j + 1));
    match (lo, hi) {
        (true, true) => PairClass::Normal,
        (false, false) => PairClass::Inverted,
        _ => PairClass::Interrupting,
    }
}

pub fn classify_positions(perm: &Permutation) -> PositionCounts {
    let mut counts = PositionCounts::default();
    for j in 0..(perm.len() / 2) as u32 {
        match pair_class(perm, j) {
            PairClass::Normal => counts.normal += 2,
            PairClass::Inverted => counts.inverted += 2,
            PairClass::Interrupting => counts.interrupting += 2,
        }
    }
    counts
}

/// Kind of block at block-wise position `i`, if any.
#[inline]
pub fn block_at(perm: &Permutation, i: usize) -> Option<BlockKind> {
    let lo = perm.row(2 * i as u32);
    let hi = perm.row(2 * i as u32 + 1);
    if hi == lo + 1 && lo.is_multiple_of(2) {
        Some(BlockKind::Even)
    } else if lo == hi + 1 && hi.is_multiple_of(2) {
        Some(BlockKind::Odd)
    } else {
        None
    }
}

pub fn find_blocks(perm: &Permutation) -> BlockList {
    let entries = (0..perm.len() / 2).filter_map(|i| block_at(perm, i).map(|k| (i, k))).collect();
    BlockList { entries }
}

/// Number of positions `>= i` holding a block accepted by `filter`.
pub fn count_free_blocks(perm: &Permutation, i: usize, filter: BlockFilter) -> usize {
    (i..perm.len() / 2).filter(|&p| block_at(perm, p).is_some_and(|k| filter.accepts(k))).count()
}

/// `h_n(x) = 2^n - 2^{n-x+1}` for `1 <= x <= n + 1`: columns at or above
/// `h_n(x)` have their first `x - 1` lines set.
pub fn h(n: u32, x: u32) -> u64 {
    debug_assert!(x >= 1 && x <= n + 1);
    (1u64 << n) - (1u64 << (n + 1 - x))
}

/// The smallest `m` with `2l <= h_n(m)`, or 1 when `l = 0`.
///
/// `l = 2^{n-1}` (every position allocated) has no such `m` and is rejected.
pub fn findm(l: u64, n: u32) -> Result<u32, BlockError> {
    if l == 0 {
        return Ok(1);
    }
    (1..=n).find(|&m| 2 * l <= h(n, m)).ok_or(BlockError::CountOutOfRange { l, n })
}

/// `(m, h_n(m))` for block-wise position `i`.
pub fn region(n: u32, i: usize) -> Result<(u32, u32), BlockError> {
    let m = findm(i as u64, n)?;
    Ok((m, h(n, m) as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(n: u32, e: &[u32]) -> Permutation {
        Permutation::new(n, e.to_vec()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = classify_positions(&perm(3, &[7, 2, 0, 1, 5, 3, 6, 4]));
        assert_eq!(c, PositionCounts { normal: 2, inverted: 2, interrupting: 4 });
        let c = classify_positions(&Permutation::identity(5));
        assert_eq!(c, PositionCounts { normal: 32, inverted: 0, interrupting: 0 });
        let c = classify_positions(&perm(3, &[7, 2, 0, 1, 3, 5, 4, 6]));
        assert_eq!(c.interrupting, 0);
    }

    #[test]
    fn block_examples() {
        let b = find_blocks(&perm(3, &[2, 3, 7, 6, 4, 5, 1, 0]));
        assert_eq!(b.positions(BlockFilter::Even), vec![0, 2]);
        assert_eq!(b.positions(BlockFilter::Odd), vec![1, 3]);
        assert_eq!(b.left_allocated(BlockFilter::Even), 1);
        assert_eq!(b.left_allocated(BlockFilter::Any), 4);
        let id = find_blocks(&Permutation::identity(4));
        assert_eq!(id.positions(BlockFilter::Even), (0..8).collect::<Vec<_>>());
        // rows 0 and 1 already sit together at position 1
        let b = find_blocks(&perm(3, &[7, 2, 0, 1, 5, 3, 6, 4]));
        assert_eq!(b.entries, vec![(1, BlockKind::Even)]);
        assert_eq!(b.left_allocated(BlockFilter::Any), 0);
        // differing by one is not enough: the pair must be relevant
        assert!(find_blocks(&perm(2, &[1, 2, 3, 0])).entries.is_empty());
    }

    #[test]
    fn findm_examples() {
        assert_eq!(findm(0, 4), Ok(1));
        assert_eq!(findm(1, 4), Ok(2));
        assert_eq!(findm(5, 4), Ok(3));
        assert_eq!(findm(7, 4), Ok(4));
        assert!(findm(8, 4).is_err());
        assert_eq!(h(4, 1), 0);
        assert_eq!(h(4, 2), 8);
        assert_eq!(h(4, 3), 12);
    }

    #[test]
    fn free_block_examples() {
        assert_eq!(count_free_blocks(&Permutation::identity(3), 0, BlockFilter::Even), 4);
        assert_eq!(count_free_blocks(&perm(3, &[7, 2, 0, 1, 5, 3, 6, 4]), 0, BlockFilter::Any), 1);
        assert_eq!(count_free_blocks(&perm(3, &[7, 2, 0, 1, 5, 3, 6, 4]), 2, BlockFilter::Any), 0);
        // (0,1 | 6,3 | 2,5 | 4,7): only position 0 holds a block
        let p = perm(3, &[0, 1, 6, 3, 2, 5, 4, 7]);
        assert_eq!(count_free_blocks(&p, 0, BlockFilter::Even), 1);
        assert_eq!(count_free_blocks(&p, 1, BlockFilter::Even), 0);
    }

    #[test]
    fn interrupting_is_multiple_of_four_exhaustively() {
        let mut e: Vec<u32> = (0..8).collect();
        let mut count = 0;
        permute(&mut e, 0, &mut |v| {
            let c = classify_positions(&perm(3, v));
            assert_eq!(c.normal + c.inverted + c.interrupting, 8);
            assert_eq!(c.interrupting % 4, 0, "{v:?}");
            count += 1;
        });
        assert_eq!(count, 40320);
    }

    fn permute(v: &mut Vec<u32>, k: usize, f: &mut impl FnMut(&[u32])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }
}
