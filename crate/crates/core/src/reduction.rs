//! One size-reduction step: build blocks pair by pair until the permutation
//! has the form `Q ⊗ I_2`.
//!
//! Each iteration `i` picks a pair, conjoins it into two neighbouring columns
//! (`cons`) and moves the resulting block to block-wise position `i`
//! (`alloc`). The construction region shrinks as more blocks are allocated,
//! which is what keeps the emitted gates from disturbing earlier blocks.

use thiserror::Error;

use crate::blocks::{self, block_at, count_free_blocks, pair_class, region, BlockError, BlockKind, PairClass};
use crate::cost::toffoli_count;
use crate::perm::{line_bit, top_line, Gate, GateSequence, PermError, Permutation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("no admissible pair for block-wise position {position}")]
    PairNotFound { position: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("width {0} is too small for a reduction step")]
    WidthTooSmall(u32),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Blocks(#[from] BlockError),
}

/// Two row numbers to be conjoined. For true relevant pairs
/// `{a, b} = {2j, 2j + 1}`; preprocessing also uses members of two
/// different pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelevantPair {
    pub a: u32,
    pub b: u32,
}

impl RelevantPair {
    pub fn new(a: u32, b: u32) -> Self {
        RelevantPair { a, b }
    }
}

/// Which part of a reduction loop is running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Every pair is normal; even blocks everywhere.
    AllNormal,
    /// First half of the general loop: normal pairs become even blocks.
    NormalPart,
    /// Second half of the general loop: inverted pairs become odd blocks.
    InvertedPart,
}

impl Phase {
    pub fn block_kind(self) -> BlockKind {
        match self {
            Phase::AllNormal | Phase::NormalPart => BlockKind::Even,
            Phase::InvertedPart => BlockKind::Odd,
        }
    }

    pub fn pair_class(self) -> PairClass {
        match self {
            Phase::AllNormal | Phase::NormalPart => PairClass::Normal,
            Phase::InvertedPart => PairClass::Inverted,
        }
    }

    /// One past the last block-wise position of the phase at width `n`.
    pub fn end(self, n: u32) -> usize {
        match self {
            Phase::NormalPart => 1 << (n - 2),
            Phase::AllNormal | Phase::InvertedPart => 1 << (n - 1),
        }
    }
}

/// Strategy for choosing the pair conjoined at each iteration.
pub trait PairSelector: Sync {
    fn select(&self, perm: &Permutation, i: usize, phase: Phase) -> Result<RelevantPair, ReductionError>;
}

/// The plain scans: `pick`, or `n_pick` in the normal part of the general loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlainPick;

impl PairSelector for PlainPick {
    fn select(&self, perm: &Permutation, i: usize, phase: Phase) -> Result<RelevantPair, ReductionError> {
        match phase {
            Phase::NormalPart => n_pick(perm, i),
            Phase::AllNormal | Phase::InvertedPart => pick(perm, i),
        }
    }
}

fn check_width(perm: &Permutation) -> Result<u32, ReductionError> {
    let n = perm.width();
    if n < 3 {
        return Err(ReductionError::WidthTooSmall(n));
    }
    Ok(n)
}

fn check_position(perm: &Permutation, i: usize) -> Result<(), ReductionError> {
    if i >= perm.len() / 2 {
        return Err(ReductionError::PreconditionViolated(format!("block-wise position {i} out of range")));
    }
    Ok(())
}

/// First pair, scanning columns upward from the region start, whose partner
/// sits further right.
pub fn pick(perm: &Permutation, i: usize) -> Result<RelevantPair, ReductionError> {
    let n = check_width(perm)?;
    check_position(perm, i)?;
    let (_, k) = region(n, i)?;
    (k..perm.len() as u32)
        .find_map(|j| {
            let a = perm.row(j);
            let b = a ^ 1;
            (perm.column_of(b) > j).then_some(RelevantPair { a, b })
        })
        .ok_or(ReductionError::PairNotFound { position: i })
}

/// Like [`pick`] but restricted to normal pairs. Falls back to the
/// unallocated normal pair furthest to the right, which then needs lifting.
pub fn n_pick(perm: &Permutation, i: usize) -> Result<RelevantPair, ReductionError> {
    let n = check_width(perm)?;
    check_position(perm, i)?;
    let (_, k) = region(n, i)?;
    let normal_first = |j: u32| {
        let a = perm.row(j);
        let b = a ^ 1;
        (perm.column_of(b) > j && pair_class(perm, a >> 1) == PairClass::Normal).then_some(RelevantPair { a, b })
    };
    if let Some(p) = (k..perm.len() as u32).find_map(normal_first) {
        return Ok(p);
    }
    // min(column(a), column(b)) is the first member's column, so the last
    // hit of an ascending scan maximizes it
    (2 * i as u32..k).rev().find_map(normal_first).ok_or(ReductionError::PairNotFound { position: i })
}

/// All pairs the phase may conjoin at position `i`, in scan order. Pairs
/// needing a region lift are only offered when nothing in-region qualifies.
pub fn admissible_pairs(perm: &Permutation, i: usize, phase: Phase) -> Result<Vec<RelevantPair>, ReductionError> {
    let n = check_width(perm)?;
    check_position(perm, i)?;
    let (_, k) = region(n, i)?;
    let class = phase.pair_class();
    let scan = |from: u32| -> Vec<RelevantPair> {
        (from..perm.len() as u32)
            .filter_map(|j| {
                let a = perm.row(j);
                let b = a ^ 1;
                (perm.column_of(b) > j && pair_class(perm, a >> 1) == class).then_some(RelevantPair { a, b })
            })
            .collect()
    };
    let in_region = scan(k);
    if !in_region.is_empty() || phase != Phase::NormalPart {
        return Ok(in_region);
    }
    Ok(scan(2 * i as u32))
}

/// Gates that move the pair into two bit-`n`-adjacent columns.
pub fn cons(perm: &Permutation, i: usize, pair: RelevantPair) -> Result<GateSequence, ReductionError> {
    let n = check_width(perm)?;
    check_position(perm, i)?;
    let (m, k) = region(n, i)?;
    let alpha = perm.column_of(pair.a);
    let beta = perm.column_of(pair.b);
    let gamma = alpha ^ beta;
    if gamma & 1 == 0 {
        return Err(ReductionError::PreconditionViolated(format!(
            "rows {} and {} sit at columns of equal parity",
            pair.a, pair.b
        )));
    }
    let mut seq = GateSequence::new(n);
    let delta = top_line(n, gamma);
    if delta == n {
        return Ok(seq);
    }
    if delta < m || alpha < k || beta < k {
        return Err(ReductionError::PreconditionViolated(format!(
            "rows {} and {} are outside the construction region for position {i}",
            pair.a, pair.b
        )));
    }
    let flip = (i >> (n - 1 - delta)) & 1 == 1;
    if flip {
        seq.push_unchecked(Gate::x(n, delta));
    }
    for j in delta + 1..n {
        if gamma & line_bit(n, j) != 0 {
            seq.push_unchecked(Gate::cx(n, delta, j));
        }
    }
    if flip {
        seq.push_unchecked(Gate::x(n, delta));
    }
    let controls: Vec<u32> = (1..m).chain([n]).collect();
    seq.push_unchecked(Gate::mct(n, &controls, delta));
    Ok(seq)
}

/// Gates that move the conjoined pair containing `a` to position `i`.
pub fn alloc(perm: &Permutation, i: usize, a: u32) -> Result<GateSequence, ReductionError> {
    check_width(perm)?;
    let alpha = perm.column_of(a);
    if perm.row(alpha ^ 1) != a ^ 1 {
        return Err(ReductionError::PreconditionViolated(format!("row {a} is not conjoined with its partner")));
    }
    alloc_block(perm, i, a)
}

/// [`alloc`] without the partner check; the block may hold any two rows.
pub(crate) fn alloc_block(perm: &Permutation, i: usize, a: u32) -> Result<GateSequence, ReductionError> {
    let n = check_width(perm)?;
    check_position(perm, i)?;
    let j = (perm.column_of(a) >> 1) as usize;
    if j < i {
        return Err(ReductionError::PreconditionViolated(format!(
            "block at position {j} lies inside the allocated prefix 0..{i}"
        )));
    }
    let mut seq = GateSequence::new(n);
    let gamma = (i ^ j) as u32;
    if gamma == 0 {
        return Ok(seq);
    }
    // block positions use lines 1..n-1, line x being bit n-1-x
    let w = n - 1;
    let delta = top_line(w, gamma);
    let mut controls = Vec::new();
    for x in delta + 1..=w {
        let bit = line_bit(w, x);
        if gamma & bit != 0 {
            seq.push_unchecked(Gate::cx(n, delta, x));
        }
        if (i as u32) & bit != 0 {
            controls.push(x);
        }
    }
    seq.push_unchecked(Gate::mct(n, &controls, delta));
    Ok(seq)
}

/// Moves `row` into the construction region with gates targeting lines
/// `1..m-1`. Each gate's controls are grown greedily from the row's own
/// column bits until neither an allocated column nor `keep`'s column
/// satisfies them.
fn lift_into_region(
    perm: &mut Permutation,
    seq: &mut GateSequence,
    i: usize,
    row: u32,
    keep: u32,
) -> Result<usize, ReductionError> {
    let n = perm.width();
    let (m, k) = region(n, i)?;
    let allocated = 2 * i as u32;
    let mut lifts = 0;
    loop {
        let c = perm.column_of(row);
        if c >= k {
            return Ok(lifts);
        }
        let t = (1..m)
            .find(|&l| c & line_bit(n, l) == 0)
            .expect("a column below the region has a clear bit among lines 1..m-1");
        let keep_col = perm.column_of(keep);
        let (mut pos, mut neg) = (0u32, 0u32);
        let matches = |x: u32, pos: u32, neg: u32| x & pos == pos && x & neg == 0;
        let bad = |pos: u32, neg: u32| {
            let hits = (0..allocated).filter(|&x| matches(x, pos, neg)).count();
            hits + usize::from(matches(keep_col, pos, neg))
        };
        let mut current = bad(pos, neg);
        while current > 0 {
            let mut best: Option<(usize, u32)> = None;
            for l in (1..=n).filter(|&l| l != t) {
                let bit = line_bit(n, l);
                if (pos | neg) & bit != 0 {
                    continue;
                }
                let (p, q) = if c & bit != 0 { (pos | bit, neg) } else { (pos, neg | bit) };
                let score = bad(p, q);
                if best.is_none_or(|(s, _)| score < s) {
                    best = Some((score, bit));
                }
            }
            let (score, bit) = best.expect("a fully-controlled gate excludes every other column");
            if c & bit != 0 {
                pos |= bit;
            } else {
                neg |= bit;
            }
            current = score;
        }
        let gate = Gate::from_masks(n, t, pos, neg);
        perm.apply_unchecked(&gate);
        seq.push_unchecked(gate);
        lifts += 1;
    }
}

/// Result of conjoining and allocating one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub perm: Permutation,
    pub gates: GateSequence,
    pub lifts: usize,
}

/// Lifts out-of-region members, then applies `cons` and `alloc`.
pub fn construct_and_allocate(perm: &Permutation, i: usize, pair: RelevantPair) -> Result<Step, ReductionError> {
    let n = check_width(perm)?;
    let mut p = perm.clone();
    let mut gates = GateSequence::new(n);
    let mut lifts = lift_into_region(&mut p, &mut gates, i, pair.a, pair.b)?;
    lifts += lift_into_region(&mut p, &mut gates, i, pair.b, pair.a)?;
    let c = cons(&p, i, pair)?;
    p.apply_sequence_mut(&c)?;
    gates.append(&c)?;
    let a = alloc_block(&p, i, pair.a)?;
    p.apply_sequence_mut(&a)?;
    gates.append(&a)?;
    Ok(Step { perm: p, gates, lifts })
}

/// Toffoli cost of [`construct_and_allocate`].
pub fn step_cost(step: &Step) -> u64 {
    toffoli_count(&step.gates)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutcome {
    pub perm: Permutation,
    pub gates: GateSequence,
    pub lifts: usize,
    /// Positions that already held a suitable block and cost nothing.
    pub free_blocks: usize,
}

fn run_phase(
    out: &mut ReductionOutcome,
    range: std::ops::Range<usize>,
    phase: Phase,
    selector: &dyn PairSelector,
) -> Result<(), ReductionError> {
    let kind = phase.block_kind();
    for i in range {
        if block_at(&out.perm, i) == Some(kind) {
            out.free_blocks += 1;
            continue;
        }
        let pair = selector.select(&out.perm, i, phase)?;
        let step = construct_and_allocate(&out.perm, i, pair)?;
        if block_at(&step.perm, i) != Some(kind) {
            return Err(ReductionError::PreconditionViolated(format!(
                "pair ({}, {}) did not yield a {kind:?} block at position {i}",
                pair.a, pair.b
            )));
        }
        out.gates.append(&step.gates)?;
        out.perm = step.perm;
        out.lifts += step.lifts;
    }
    Ok(())
}

pub fn reduce_normal_with(perm: &Permutation, selector: &dyn PairSelector) -> Result<ReductionOutcome, ReductionError> {
    let n = check_width(perm)?;
    if let Some(c) = (0..perm.len() as u32).find(|&c| (perm.row(c) ^ c) & 1 != 0) {
        return Err(ReductionError::PreconditionViolated(format!(
            "row {} at column {c} is not at a normal position",
            perm.row(c)
        )));
    }
    let mut out = ReductionOutcome { perm: perm.clone(), gates: GateSequence::new(n), lifts: 0, free_blocks: 0 };
    run_phase(&mut out, 0..Phase::AllNormal.end(n), Phase::AllNormal, selector)?;
    Ok(out)
}

/// Reduction for a permutation whose pairs are all normal.
pub fn reduce_normal(perm: &Permutation) -> Result<(Permutation, GateSequence), ReductionError> {
    let out = reduce_normal_with(perm, &PlainPick)?;
    Ok((out.perm, out.gates))
}

pub fn reduce_general_with(
    perm: &Permutation,
    selector: &dyn PairSelector,
) -> Result<ReductionOutcome, ReductionError> {
    let n = check_width(perm)?;
    let counts = blocks::classify_positions(perm);
    let half = perm.len() / 2;
    if counts.normal != half || counts.inverted != half {
        return Err(ReductionError::PreconditionViolated(format!(
            "ratio {}:{}:{} is not 0.5:0.5:0",
            counts.normal, counts.inverted, counts.interrupting
        )));
    }
    let mut out = ReductionOutcome { perm: perm.clone(), gates: GateSequence::new(n), lifts: 0, free_blocks: 0 };
    let quarter = Phase::NormalPart.end(n);
    run_phase(&mut out, 0..quarter, Phase::NormalPart, selector)?;
    run_phase(&mut out, quarter..half, Phase::InvertedPart, selector)?;
    let flip = Gate::cx(n, 1, n);
    out.perm.apply_unchecked(&flip);
    out.gates.push_unchecked(flip);
    if !out.perm.is_reducible() {
        return Err(ReductionError::PreconditionViolated("result is not of the form Q ⊗ I_2".into()));
    }
    Ok(out)
}

/// Reduction for a permutation with ratio 0.5:0.5:0.
pub fn reduce_general(perm: &Permutation) -> Result<(Permutation, GateSequence), ReductionError> {
    let out = reduce_general_with(perm, &PlainPick)?;
    Ok((out.perm, out.gates))
}

/// Number of blocks of the phase's kind at positions `> i`.
pub fn free_after(perm: &Permutation, i: usize, phase: Phase) -> usize {
    count_free_blocks(perm, i + 1, phase.block_kind().into())
}

/// Analytic Toffoli budgets for one reduction at width `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundSet {
    pub n_c: u64,
    pub n_a: u64,
    pub extra: u64,
    pub per_reduction_total: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, t| acc * (n - t) / (t + 1))
}

/// `Σ_{i=2}^{k} (2i - 3) C(k, i)`
fn weighted_binomial_sum(k: u64) -> u64 {
    (2..=k).map(|i| (2 * i - 3) * binomial(k, i)).sum()
}

pub fn bounds(n: u32) -> Result<BoundSet, ReductionError> {
    if n < 3 {
        return Err(ReductionError::WidthTooSmall(n));
    }
    let n = n as u64;
    let n_c: u64 = (2..n).map(|i| (2 * i - 3) << (n - i)).sum();
    let n_a: u64 = (2..n.saturating_sub(1)).map(|j| weighted_binomial_sum(n - j)).sum();
    // 5 · 2^{n-4}, rounded up at n = 3
    let mixing = (5u64 << n).div_ceil(16);
    let extra = mixing + 2 * n - 5 + weighted_binomial_sum(n - 3);
    Ok(BoundSet { n_c, n_a, extra, per_reduction_total: n_c + n_a + extra })
}

/// `Σ_{x=3}^{n} bounds(x).per_reduction_total`; zero below width 3.
pub fn total_bound(n: u32) -> u64 {
    (3..=n).map(|x| bounds(x).expect("x >= 3").per_reduction_total).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{find_blocks, BlockFilter};

    fn perm(n: u32, e: &[u32]) -> Permutation {
        Permutation::new(n, e.to_vec()).unwrap()
    }

    fn trace() -> Permutation {
        perm(3, &[0, 1, 6, 3, 2, 5, 4, 7])
    }

    #[test]
    fn pick_examples() {
        assert_eq!(pick(&Permutation::identity(3), 0).unwrap(), RelevantPair::new(0, 1));
        assert_eq!(pick(&trace(), 1).unwrap(), RelevantPair::new(5, 4));
        assert_eq!(pick(&trace(), 0).unwrap(), RelevantPair::new(0, 1));
    }

    #[test]
    fn n_pick_examples() {
        assert_eq!(n_pick(&perm(3, &[0, 5, 2, 7, 4, 1, 6, 3]), 0).unwrap(), RelevantPair::new(0, 1));
        let p = n_pick(&Permutation::identity(3), 1).unwrap();
        assert_eq!(pair_class(&Permutation::identity(3), p.a >> 1), PairClass::Normal);
        assert_eq!(p, RelevantPair::new(4, 5));
        // all pairs inverted
        let inv = perm(3, &[1, 0, 3, 2, 5, 4, 7, 6]);
        assert_eq!(n_pick(&inv, 0), Err(ReductionError::PairNotFound { position: 0 }));
    }

    #[test]
    fn cons_worked_example() {
        let p = trace();
        let seq = cons(&p, 1, RelevantPair::new(5, 4)).unwrap();
        assert_eq!(seq.gates(), &[Gate::x(3, 2), Gate::x(3, 2), Gate::ccx(3, 1, 3, 2)]);
        assert_eq!(p.apply_gate(&seq.gates()[2]).unwrap().entries(), &[0, 1, 6, 3, 2, 7, 4, 5]);
    }

    #[test]
    fn cons_adjacent_and_parity_errors() {
        assert!(cons(&trace(), 0, RelevantPair::new(0, 1)).unwrap().is_empty());
        assert!(matches!(cons(&trace(), 1, RelevantPair::new(6, 4)), Err(ReductionError::PreconditionViolated(_))));
    }

    #[test]
    fn cons_with_two_high_bits() {
        // rows 0 and 1 at columns 0 and 7: γ = 111, δ = 1
        let p = perm(3, &[0, 2, 3, 4, 5, 6, 7, 1]);
        let seq = cons(&p, 0, RelevantPair::new(0, 1)).unwrap();
        assert_eq!(seq.gates(), &[Gate::cx(3, 1, 2), Gate::cx(3, 3, 1)]);
        let mut q = p.clone();
        q.apply_sequence_mut(&seq).unwrap();
        assert_eq!(q.column_of(0) ^ q.column_of(1), 1);
    }

    #[test]
    fn alloc_examples() {
        let p = perm(3, &[0, 1, 6, 3, 2, 7, 4, 5]);
        let seq = alloc(&p, 1, 5).unwrap();
        assert_eq!(seq.gates(), &[Gate::cx(3, 2, 1)]);
        assert_eq!(p.apply_gate(&seq.gates()[0]).unwrap().entries(), &[0, 1, 4, 5, 2, 7, 6, 3]);
        assert!(alloc(&Permutation::identity(3), 2, 4).unwrap().is_empty());
        let q = perm(3, &[2, 3, 0, 1, 4, 5, 6, 7]);
        assert_eq!(alloc(&q, 0, 0).unwrap().gates(), &[Gate::x(3, 2)]);
        assert!(matches!(alloc(&trace(), 1, 6), Err(ReductionError::PreconditionViolated(_))));
    }

    #[test]
    fn reduce_normal_examples() {
        let (p, r) = reduce_normal(&Permutation::identity(4)).unwrap();
        assert!(p.is_identity() && r.is_empty());
        let (p, r) = reduce_normal(&trace()).unwrap();
        assert!(p.is_reducible());
        assert_eq!(&r.gates()[..4], &[Gate::x(3, 2), Gate::x(3, 2), Gate::ccx(3, 1, 3, 2), Gate::cx(3, 2, 1)]);
        assert!(r.iter().all(|g| g.target() != 3));
        let mut q = trace();
        q.apply_sequence_mut(&r).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn reduce_general_rejects_wrong_ratio() {
        assert!(matches!(reduce_general(&Permutation::identity(4)), Err(ReductionError::PreconditionViolated(_))));
    }

    #[test]
    fn bound_values() {
        let b3 = bounds(3).unwrap();
        assert_eq!((b3.n_c, b3.n_a, b3.extra), (2, 0, 4));
        let b4 = bounds(4).unwrap();
        assert_eq!((b4.n_c, b4.n_a, b4.extra), (10, 1, 8));
        let b8 = bounds(8).unwrap();
        assert_eq!((b8.n_c, b8.n_a, b8.extra, b8.per_reduction_total), (354, 303, 163, 820));
        assert!(bounds(2).is_err());
    }

    /// Independent evaluation straight from the summation formulas, using
    /// floating-point binomials via Pascal's triangle.
    #[test]
    fn bounds_match_direct_summation() {
        let mut pascal = vec![vec![1u64]];
        for r in 1..=30usize {
            let prev = &pascal[r - 1];
            let mut row = vec![1u64; r + 1];
            for c in 1..r {
                row[c] = prev[c - 1] + prev[c];
            }
            pascal.push(row);
        }
        let f = |k: usize| -> u64 { (2..=k).map(|i| (2 * i as u64 - 3) * pascal[k][i]).sum() };
        for n in 3..=24usize {
            let mut n_c = 0u64;
            for i in 2..n {
                n_c += (2 * i as u64 - 3) * 2u64.pow((n - i) as u32);
            }
            let mut n_a = 0u64;
            for j in 2..=n.saturating_sub(2) {
                n_a += f(n - j);
            }
            let b = bounds(n as u32).unwrap();
            assert_eq!((b.n_c, b.n_a), (n_c, n_a), "n = {n}");
            if n >= 4 {
                let extra = 5 * 2u64.pow(n as u32 - 4) + 2 * n as u64 - 5 + f(n - 3);
                assert_eq!(b.extra, extra, "n = {n}");
            }
        }
    }

    #[test]
    fn left_allocation_is_monotone() {
        for seed in 0..20 {
            let mut p = Permutation::sample(5, seed, crate::perm::SampleKind::ParityAligned);
            for i in 0..16 {
                if block_at(&p, i) != Some(BlockKind::Even) {
                    let pair = pick(&p, i).unwrap();
                    p = construct_and_allocate(&p, i, pair).unwrap().perm;
                }
                assert!(find_blocks(&p).left_allocated(BlockFilter::Even) > i);
            }
            assert!(p.is_reducible());
        }
    }
}
