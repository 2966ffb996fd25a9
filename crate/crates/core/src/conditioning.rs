//! Bringing an arbitrary permutation to the ratio 0.5:0.5:0 required by
//! the general reduction.
//!
//! `mix` searches small CNOT composites until exactly half of the row
//! numbers sit at interrupting positions. `preprocess` then pairs one member
//! of each interrupting pair with a member of another one, parks these
//! pseudo-blocks in the first quarter of the columns and flips their parity
//! with a single gate, leaving no interrupting positions at all.

use thiserror::Error;

use crate::blocks::{classify_positions, pair_class, region, BlockError, PairClass};
use crate::perm::{line_bit, Control, Gate, GateSequence, PermError, Permutation};
use crate::reduction::{self, ReductionError, RelevantPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditioningError {
    #[error("width {0} is too small for conditioning")]
    WidthTooSmall(u32),
    #[error("composite search missed the target ratio and fixups are disabled")]
    FixupsDisabled,
    #[error("no interrupting pairs left for position {position}")]
    PairNotFound { position: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Blocks(#[from] BlockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MixConfig {
    /// Largest composite depth tried, at most 4.
    pub max_depth: u32,
    /// Cap on the number of composites evaluated.
    pub enumeration_budget: u64,
    pub allow_fallback_fixups: bool,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig { max_depth: 4, enumeration_budget: 2_000_000, allow_fallback_fixups: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixOutcome {
    pub perm: Permutation,
    pub gates: GateSequence,
    /// Depth of the composite that hit the target; `Some(0)` when the input
    /// already had it, `None` when fixups were needed.
    pub exact_depth: Option<u32>,
    pub fixups: usize,
    pub composites_tried: u64,
}

/// CNOT gates in enumeration order: by control line, polarity, then target.
pub fn cx_gates(n: u32) -> Vec<Gate> {
    let mut out = Vec::new();
    for c in 1..=n {
        for ctrl in [Control::pos(c), Control::neg(c)] {
            for t in (1..=n).filter(|&t| t != c) {
                out.push(Gate::new(n, t, [ctrl]).expect("valid CNOT"));
            }
        }
    }
    out
}

/// The `2n - 2` CNOT gates targeting line `n`, in enumeration order.
pub fn final_layer(n: u32) -> Vec<Gate> {
    cx_gates(n).into_iter().filter(|g| g.target() == n).collect()
}

fn interrupting(perm: &Permutation) -> usize {
    classify_positions(perm).interrupting
}

struct Search {
    prefix_gates: Vec<Gate>,
    finals: Vec<Gate>,
    target: usize,
    budget: u64,
    tried: u64,
    best: Option<(usize, Vec<Gate>)>,
    hit: Option<Vec<Gate>>,
    stack: Vec<Gate>,
}

impl Search {
    /// Enumerates prefixes of exactly `remaining` gates below the current
    /// stack. Returns false once the search must stop.
    fn descend(&mut self, perm: &Permutation, remaining: u32) -> bool {
        if remaining == 0 {
            for k in 0..self.finals.len() {
                if self.tried >= self.budget {
                    return false;
                }
                self.tried += 1;
                let g = self.finals[k];
                let p = perm.apply_gate(&g).expect("same width");
                let lambda = interrupting(&p);
                let dist = lambda.abs_diff(self.target);
                let mut gates = self.stack.clone();
                gates.push(g);
                if dist == 0 {
                    self.hit = Some(gates);
                    return false;
                }
                if self.best.as_ref().is_none_or(|(d, _)| dist < *d) {
                    self.best = Some((dist, gates));
                }
            }
            return true;
        }
        for k in 0..self.prefix_gates.len() {
            let g = self.prefix_gates[k];
            // a repeated gate cancels and only revisits a shallower composite
            if self.stack.last() == Some(&g) {
                continue;
            }
            let p = perm.apply_gate(&g).expect("same width");
            self.stack.push(g);
            let go_on = self.descend(&p, remaining - 1);
            self.stack.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
}

pub fn mix_detailed(perm: &Permutation, cfg: &MixConfig) -> Result<MixOutcome, ConditioningError> {
    let n = perm.width();
    if n < 3 {
        return Err(ConditioningError::WidthTooSmall(n));
    }
    let target = perm.len() / 2;
    let mut out = MixOutcome {
        perm: perm.clone(),
        gates: GateSequence::new(n),
        exact_depth: Some(0),
        fixups: 0,
        composites_tried: 0,
    };
    if interrupting(perm) == target {
        return Ok(out);
    }
    let mut search = Search {
        prefix_gates: cx_gates(n),
        finals: final_layer(n),
        target,
        budget: cfg.enumeration_budget,
        tried: 0,
        best: None,
        hit: None,
        stack: Vec::new(),
    };
    for t in 1..=cfg.max_depth.min(4) {
        if !search.descend(perm, t - 1) {
            break;
        }
    }
    out.composites_tried = search.tried;
    let chosen = match (&search.hit, &search.best) {
        (Some(g), _) => {
            out.exact_depth = Some(g.len() as u32);
            g.clone()
        }
        (None, Some((_, g))) => {
            out.exact_depth = None;
            g.clone()
        }
        (None, None) => {
            out.exact_depth = None;
            Vec::new()
        }
    };
    for g in chosen {
        out.perm.apply_unchecked(&g);
        out.gates.push_unchecked(g);
    }
    while interrupting(&out.perm) != target {
        if !cfg.allow_fallback_fixups {
            return Err(ConditioningError::FixupsDisabled);
        }
        let seq = transposition_fixup(&out.perm);
        out.perm.apply_sequence_mut(&seq)?;
        out.gates.append(&seq)?;
        out.fixups += 1;
    }
    Ok(out)
}

/// Brings the interrupting count to exactly `2^{n-1}`.
pub fn mix(perm: &Permutation, cfg: &MixConfig) -> Result<(Permutation, GateSequence), ConditioningError> {
    let out = mix_detailed(perm, cfg)?;
    Ok((out.perm, out.gates))
}

/// Exchanges the rows of one even and one odd column, moving the
/// interrupting count four steps toward `2^{n-1}`.
///
/// Lowering the count exchanges two interrupting rows of different pairs;
/// raising it exchanges two non-interrupting ones. The columns are brought
/// next to each other by CNOTs controlled on line `n`, exchanged by one
/// fully-controlled gate targeting line `n`, and the CNOTs are undone.
fn transposition_fixup(perm: &Permutation) -> GateSequence {
    let n = perm.width();
    let lambda = interrupting(perm);
    let want_interrupting = lambda > perm.len() / 2;
    let len = perm.len() as u32;
    let eligible = |c: u32| (pair_class(perm, perm.row(c) >> 1) == PairClass::Interrupting) == want_interrupting;
    let mut best: Option<(u32, u32, u32)> = None;
    for u in (0..len).step_by(2).filter(|&u| eligible(u)) {
        for v in (1..len).step_by(2).filter(|&v| eligible(v)) {
            if perm.row(u) >> 1 == perm.row(v) >> 1 {
                continue;
            }
            let d = (u ^ v).count_ones();
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, u, v));
            }
        }
    }
    let (_, u, v) = best.expect("the count differs from 2^{n-1}, so two eligible rows of distinct pairs exist");
    let mut seq = GateSequence::new(n);
    let conj: Vec<Gate> = (1..n).filter(|&l| (u ^ v) & line_bit(n, l) != 0).map(|l| Gate::cx(n, n, l)).collect();
    for g in &conj {
        seq.push_unchecked(*g);
    }
    let controls = (1..n).map(|l| if u & line_bit(n, l) != 0 { Control::pos(l) } else { Control::neg(l) });
    seq.push_unchecked(Gate::new(n, n, controls).expect("valid fixup gate"));
    for g in conj.iter().rev() {
        seq.push_unchecked(*g);
    }
    seq
}

/// What flipping the parity of a pseudo-pair member produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlipOutcome {
    /// The member currently mismatches its column parity; its pair ends normal.
    Normal,
    /// The member currently matches its column parity; its pair ends inverted.
    Inverted,
}

/// One member from each of two interrupting pairs, at columns of opposite
/// parity: `a` at an even column, `b` at an odd one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PseudoPair {
    pub a: u32,
    pub b: u32,
    /// Outcome of the final flip for `a` and `b` respectively.
    pub flip_choice: [FlipOutcome; 2],
}

impl PseudoPair {
    pub fn as_pair(&self) -> RelevantPair {
        RelevantPair { a: self.a, b: self.b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Quotas {
    normal: i64,
    inverted: i64,
}

/// Normal and inverted pairs still needed for 0.5:0.5 once every pseudo-pair
/// parked left of column `2i` has been flipped.
fn quotas(perm: &Permutation, i: usize) -> Quotas {
    let quarter = (perm.len() / 4) as i64;
    let mut q = Quotas { normal: quarter, inverted: quarter };
    for j in 0..(perm.len() / 2) as u32 {
        match pair_class(perm, j) {
            PairClass::Normal => q.normal -= 1,
            PairClass::Inverted => q.inverted -= 1,
            PairClass::Interrupting => {}
        }
    }
    for c in 0..2 * i as u32 {
        let r = perm.row(c);
        if pair_class(perm, r >> 1) != PairClass::Interrupting {
            continue;
        }
        if (r ^ c) & 1 == 0 {
            q.inverted -= 1;
        } else {
            q.normal -= 1;
        }
    }
    q
}

fn take(q: &mut Quotas) -> FlipOutcome {
    if q.normal >= q.inverted {
        q.normal -= 1;
        FlipOutcome::Normal
    } else {
        q.inverted -= 1;
        FlipOutcome::Inverted
    }
}

/// Chooses the pseudo-pair parked at position `i`.
pub fn pre_pick(perm: &Permutation, i: usize) -> Result<PseudoPair, ConditioningError> {
    let n = perm.width();
    if n < 3 {
        return Err(ConditioningError::WidthTooSmall(n));
    }
    let (_, k) = region(n, i)?;
    let handled = 2 * i as u32;
    let len = perm.len() as u32;
    let unhandled = |r: u32| {
        pair_class(perm, r >> 1) == PairClass::Interrupting
            && perm.column_of(r & !1) >= handled
            && perm.column_of(r | 1) >= handled
    };
    let mut q = quotas(perm, i);
    let outcomes = [take(&mut q), take(&mut q)];
    // both members of an interrupting pair share a column parity; from a
    // pair on the `parity` side take the member whose flip gives `outcome`
    let choose = |parity: u32, outcome: FlipOutcome| -> Option<u32> {
        let wanted = |c: u32| {
            let r = perm.row(c);
            let matching = (r ^ c) & 1 == 0;
            unhandled(r) && matching == (outcome == FlipOutcome::Inverted)
        };
        let in_region = (k..len).filter(|c| c & 1 == parity).find(|&c| wanted(c));
        let col = in_region.or_else(|| (handled..len).rev().filter(|c| c & 1 == parity).find(|&c| wanted(c)))?;
        Some(perm.row(col))
    };
    let a = choose(0, outcomes[0]).ok_or(ConditioningError::PairNotFound { position: i })?;
    let b = choose(1, outcomes[1]).ok_or(ConditioningError::PairNotFound { position: i })?;
    Ok(PseudoPair { a, b, flip_choice: outcomes })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessOutcome {
    pub perm: Permutation,
    pub gates: GateSequence,
    pub lifts: usize,
    pub picks: Vec<PseudoPair>,
}

pub fn preprocess_detailed(perm: &Permutation) -> Result<PreprocessOutcome, ConditioningError> {
    let n = perm.width();
    if n < 3 {
        return Err(ConditioningError::WidthTooSmall(n));
    }
    let lambda = interrupting(perm);
    if lambda != perm.len() / 2 {
        return Err(ConditioningError::PreconditionViolated(format!(
            "{lambda} interrupting positions, expected {}",
            perm.len() / 2
        )));
    }
    let mut out = PreprocessOutcome { perm: perm.clone(), gates: GateSequence::new(n), lifts: 0, picks: Vec::new() };
    for i in 0..perm.len() / 8 {
        let pp = pre_pick(&out.perm, i)?;
        let step = reduction::construct_and_allocate(&out.perm, i, pp.as_pair())?;
        out.gates.append(&step.gates)?;
        out.perm = step.perm;
        out.lifts += step.lifts;
        out.picks.push(pp);
    }
    let flip = Gate::new(n, n, [Control::neg(1), Control::neg(2)]).expect("valid gate");
    out.perm.apply_unchecked(&flip);
    out.gates.push_unchecked(flip);
    let c = classify_positions(&out.perm);
    if c.interrupting != 0 || c.normal != c.inverted {
        return Err(ConditioningError::PreconditionViolated(format!(
            "preprocessing ended at ratio {}:{}:{}",
            c.normal, c.inverted, c.interrupting
        )));
    }
    Ok(out)
}

/// Removes every interrupting position, leaving ratio 0.5:0.5:0.
pub fn preprocess(perm: &Permutation) -> Result<(Permutation, GateSequence), ConditioningError> {
    let out = preprocess_detailed(perm)?;
    Ok((out.perm, out.gates))
}
