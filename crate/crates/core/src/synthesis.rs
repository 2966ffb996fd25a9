//! The full synthesis loop: reduce the width one line at a time until two
//! lines remain, then finish with a breadth-first search.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::blocks::{block_at, classify_positions, count_free_blocks};
use crate::conditioning::{mix_detailed, preprocess_detailed, ConditioningError, MixConfig};
use crate::cost::{quantum_cost, toffoli_count, CostError, CostTable};
use crate::perm::{Gate, GateSequence, PermError, Permutation};
use crate::reduction::{
    self, admissible_pairs, bounds, construct_and_allocate, PairSelector, Phase, PlainPick, ReductionError,
    ReductionOutcome, RelevantPair,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Conditioning(#[from] ConditioningError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("synthesized circuit does not realize the input permutation")]
    VerificationFailed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisConfig {
    /// `j → d_j`: lookahead depth while the phase has `r` pairs left with
    /// `2^{j-1} < r <= 2^j`.
    pub depths: BTreeMap<u32, u32>,
    /// Depth for every `j` missing from `depths`.
    pub default_depth: u32,
    /// The last this many block-wise positions are searched exhaustively.
    pub exhaustive_tail: usize,
    pub mix: MixConfig,
    /// Echoed in reports; synthesis itself is deterministic.
    pub seed: u64,
    pub post_peephole: bool,
    pub cost_table: CostTable,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            depths: BTreeMap::new(),
            default_depth: 1,
            exhaustive_tail: 9,
            mix: MixConfig::default(),
            seed: 0,
            post_peephole: true,
            cost_table: CostTable::default_table(),
        }
    }
}

impl SynthesisConfig {
    /// Every position uses depth `d`, with no exhaustive tail.
    pub fn uniform_depth(d: u32) -> Self {
        SynthesisConfig { default_depth: d, exhaustive_tail: 0, ..SynthesisConfig::default() }
    }

    pub fn depth_for_remaining(&self, remaining: usize) -> u32 {
        let j = usize::BITS - remaining.saturating_sub(1).leading_zeros();
        self.depths.get(&j).copied().unwrap_or(self.default_depth)
    }

    /// Search depth at position `i` of `phase` for width `n`.
    pub fn depth_at(&self, n: u32, i: usize, phase: Phase) -> usize {
        let end = phase.end(n);
        let remaining = end - i;
        let half = 1usize << (n - 1);
        if i + self.exhaustive_tail >= half {
            remaining
        } else {
            self.depth_for_remaining(remaining) as usize
        }
    }
}

/// Ranks every admissible pair by the Toffoli cost of conjoining and
/// allocating it plus the best cost reachable over the following positions.
#[derive(Debug, Clone, Copy)]
pub struct Lookahead<'a> {
    pub cfg: &'a SynthesisConfig,
}

/// Outcome of a lookahead: Toffoli cost over the horizon, then the number
/// of blocks already standing beyond it (more is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Score {
    cost: u64,
    free: std::cmp::Reverse<usize>,
}

/// Best score over positions `i..i+depth` (clipped to the phase end), or
/// `None` when every continuation costs more than `budget`.
fn best_future(
    perm: &Permutation,
    i: usize,
    depth: usize,
    phase: Phase,
    budget: u64,
) -> Result<Option<Score>, ReductionError> {
    let end = phase.end(perm.width());
    if depth == 0 || i >= end {
        let free = if i >= end { 0 } else { count_free_blocks(perm, i, phase.block_kind().into()) };
        return Ok(Some(Score { cost: 0, free: std::cmp::Reverse(free) }));
    }
    if block_at(perm, i) == Some(phase.block_kind()) {
        return best_future(perm, i + 1, depth - 1, phase, budget);
    }
    let mut best: Option<Score> = None;
    let mut budget = budget;
    for pair in admissible_pairs(perm, i, phase)? {
        let step = construct_and_allocate(perm, i, pair)?;
        let c = toffoli_count(&step.gates);
        if c > budget {
            continue;
        }
        if let Some(rest) = best_future(&step.perm, i + 1, depth - 1, phase, budget - c)? {
            let score = Score { cost: c + rest.cost, free: rest.free };
            if best.is_none_or(|b| score < b) {
                best = Some(score);
                budget = score.cost;
            }
        }
    }
    Ok(best)
}

impl PairSelector for Lookahead<'_> {
    fn select(&self, perm: &Permutation, i: usize, phase: Phase) -> Result<RelevantPair, ReductionError> {
        let depth = self.cfg.depth_at(perm.width(), i, phase);
        if depth == 0 {
            return PlainPick.select(perm, i, phase);
        }
        let candidates = admissible_pairs(perm, i, phase)?;
        if candidates.is_empty() {
            return Err(ReductionError::PairNotFound { position: i });
        }
        let rank = |pair: RelevantPair, budget: u64| -> Result<Option<(Score, RelevantPair)>, ReductionError> {
            let step = construct_and_allocate(perm, i, pair)?;
            let c = toffoli_count(&step.gates);
            if c > budget {
                return Ok(None);
            }
            Ok(best_future(&step.perm, i + 1, depth - 1, phase, budget - c)?
                .map(|rest| (Score { cost: c + rest.cost, free: rest.free }, pair)))
        };
        let ranked: Vec<(Score, RelevantPair)> = if depth >= 2 && candidates.len() > 1 {
            // each candidate searches on its own copy; the minimum below is
            // taken under a total order, so scheduling cannot change it
            let all: Vec<_> = candidates.par_iter().map(|&p| rank(p, u64::MAX)).collect::<Result<_, _>>()?;
            all.into_iter().flatten().collect()
        } else {
            let mut out = Vec::with_capacity(candidates.len());
            let mut budget = u64::MAX;
            for &p in &candidates {
                if let Some(r) = rank(p, budget)? {
                    budget = budget.min(r.0.cost);
                    out.push(r);
                }
            }
            out
        };
        let (_, pair) = ranked.into_iter().min().expect("the first candidate is always ranked");
        Ok(pair)
    }
}

/// Lookahead selection at position `i` for the given phase.
pub fn select_with_lookahead(
    perm: &Permutation,
    i: usize,
    cfg: &SynthesisConfig,
    phase: Phase,
) -> Result<RelevantPair, ReductionError> {
    Lookahead { cfg }.select(perm, i, phase)
}

/// Shortest sequence over `X_1, X_2, CX_12, CX_21` taking a two-line
/// permutation to the identity.
pub fn search_two_bit(perm: &Permutation) -> Result<GateSequence, SynthesisError> {
    if perm.width() != 2 {
        return Err(PermError::WidthMismatch { expected: 2, found: perm.width() }.into());
    }
    let gens = [Gate::x(2, 1), Gate::x(2, 2), Gate::cx(2, 1, 2), Gate::cx(2, 2, 1)];
    let mut parent: HashMap<Permutation, Option<(Permutation, Gate)>> = HashMap::new();
    let mut queue = VecDeque::from([perm.clone()]);
    parent.insert(perm.clone(), None);
    while let Some(p) = queue.pop_front() {
        if p.is_identity() {
            let mut gates = Vec::new();
            let mut cur = p;
            while let Some(Some((prev, g))) = parent.get(&cur) {
                gates.push(*g);
                cur = prev.clone();
            }
            gates.reverse();
            return Ok(GateSequence::from_gates(2, gates)?);
        }
        for g in &gens {
            let q = p.apply_gate(g)?;
            if !parent.contains_key(&q) {
                parent.insert(q.clone(), Some((p.clone(), *g)));
                queue.push_back(q);
            }
        }
    }
    unreachable!("the four generators produce every two-bit permutation")
}

/// How a width stage was handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageRoute {
    /// Already of the form `Q ⊗ I_2`.
    Skipped,
    AllNormal,
    /// Every pair inverted: one `X_n`, then the all-normal reduction.
    AllInverted,
    /// Ratio already 0.5:0.5:0.
    Balanced,
    Full,
}

impl StageRoute {
    pub fn as_str(self) -> &'static str {
        match self {
            StageRoute::Skipped => "skipped",
            StageRoute::AllNormal => "all-normal",
            StageRoute::AllInverted => "all-inverted",
            StageRoute::Balanced => "balanced",
            StageRoute::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub width: u32,
    pub route: StageRoute,
    pub mix_gates: usize,
    /// Composite depth that hit the ratio, `None` when fixups were needed.
    pub mix_depth: Option<u32>,
    pub fixups: usize,
    pub pre_gates: usize,
    pub red_gates: usize,
    pub lifts: usize,
    pub free_blocks: usize,
    pub toffoli: u64,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub width: u32,
    pub stages: Vec<StageReport>,
    pub base_gates: usize,
    pub gate_count: usize,
    pub toffoli_total: u64,
    pub quantum_cost_total: u64,
    pub bound_total: u64,
    /// Stages whose mixing used more than one fixup gate.
    pub multi_fixup_stages: usize,
    pub cost_table: String,
    pub default_depth: u32,
    pub exhaustive_tail: usize,
    pub seed: u64,
    pub wall_time: Duration,
}

struct StageResult {
    gates: GateSequence,
    report: StageReport,
}

fn reduce_stage(perm: &Permutation, cfg: &SynthesisConfig) -> Result<StageResult, SynthesisError> {
    let w = perm.width();
    let selector = Lookahead { cfg };
    let mut report = StageReport {
        width: w,
        route: StageRoute::Skipped,
        mix_gates: 0,
        mix_depth: Some(0),
        fixups: 0,
        pre_gates: 0,
        red_gates: 0,
        lifts: 0,
        free_blocks: 0,
        toffoli: 0,
        bound: bounds(w)?.per_reduction_total,
    };
    let mut gates = GateSequence::new(w);
    if perm.is_reducible() {
        return Ok(StageResult { gates, report });
    }
    let counts = classify_positions(perm);
    let len = perm.len();
    let red: ReductionOutcome = if counts.normal == len {
        report.route = StageRoute::AllNormal;
        reduction::reduce_normal_with(perm, &selector)?
    } else if counts.inverted == len {
        report.route = StageRoute::AllInverted;
        let flip = Gate::x(w, w);
        gates.push(flip)?;
        report.pre_gates = 1;
        reduction::reduce_normal_with(&perm.apply_gate(&flip)?, &selector)?
    } else if counts.interrupting == 0 && counts.normal == counts.inverted {
        report.route = StageRoute::Balanced;
        reduction::reduce_general_with(perm, &selector)?
    } else {
        report.route = StageRoute::Full;
        let mixed = mix_detailed(perm, &cfg.mix)?;
        report.mix_gates = mixed.gates.len();
        report.mix_depth = mixed.exact_depth;
        report.fixups = mixed.fixups;
        gates.append(&mixed.gates)?;
        let pre = preprocess_detailed(&mixed.perm)?;
        report.pre_gates = pre.gates.len();
        report.lifts += pre.lifts;
        gates.append(&pre.gates)?;
        reduction::reduce_general_with(&pre.perm, &selector)?
    };
    report.red_gates = red.gates.len();
    report.lifts += red.lifts;
    report.free_blocks = red.free_blocks;
    gates.append(&red.gates)?;
    report.toffoli = toffoli_count(&gates);
    Ok(StageResult { gates, report })
}

/// A circuit on `n` lines which, run left to right, computes `perm`.
pub fn synthesize(
    perm: &Permutation,
    cfg: &SynthesisConfig,
) -> Result<(GateSequence, SynthesisReport), SynthesisError> {
    let start = Instant::now();
    let n = perm.width();
    let mut circuit = GateSequence::new(n);
    let mut stages = Vec::new();
    let mut current = perm.clone();
    while current.width() >= 3 {
        let stage = reduce_stage(&current, cfg)?;
        current.apply_sequence_mut(&stage.gates)?;
        circuit.append(&stage.gates.widen(n)?)?;
        stages.push(stage.report);
        current = current.reduce_width()?;
    }
    let base = match current.width() {
        2 => search_two_bit(&current)?,
        _ => {
            let mut s = GateSequence::new(1);
            if !current.is_identity() {
                s.push(Gate::x(1, 1))?;
            }
            s
        }
    };
    circuit.append(&base.widen(n)?)?;
    if cfg.post_peephole {
        circuit = circuit.peephole();
    }
    if !crate::perm::verify_identity(perm, &circuit)? {
        return Err(SynthesisError::VerificationFailed);
    }
    let stage_bound: u64 = stages.iter().map(|s| s.bound).sum();
    let report = SynthesisReport {
        width: n,
        base_gates: base.len(),
        gate_count: circuit.len(),
        toffoli_total: toffoli_count(&circuit),
        quantum_cost_total: quantum_cost(&circuit, &cfg.cost_table)?,
        bound_total: stage_bound,
        multi_fixup_stages: stages.iter().filter(|s| s.fixups > 1).count(),
        cost_table: cfg.cost_table.name().to_string(),
        default_depth: cfg.default_depth,
        exhaustive_tail: cfg.exhaustive_tail,
        seed: cfg.seed,
        wall_time: start.elapsed(),
        stages,
    };
    Ok((circuit, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuntimeClass {
    SubMinute,
    Minutes,
    /// Expected to run for an hour or more.
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeEstimate {
    pub complexity: String,
    pub predicted_seconds: f64,
    pub class: RuntimeClass,
}

/// Seconds per unit of `n · 2^{2n}` measured at depth 0.
const BASE_SECONDS: f64 = 2.0e-8;
/// Effective branching per lookahead level, relative to `2^n`.
const DEPTH_FACTOR: f64 = 1.0;

/// Coarse wall-time prediction for a synthesis run at width `n` and
/// lookahead depth `d`.
pub fn estimate_runtime_class(n: u32, d: u32) -> RuntimeEstimate {
    let complexity = if d == 0 { "O(n·2^{2n})".to_string() } else { format!("O(n·2^{{{}n}})", 2 + d) };
    let units = n as f64 * 2f64.powf((2.0 + DEPTH_FACTOR * d as f64) * n as f64);
    let predicted_seconds = BASE_SECONDS * units;
    let class = if predicted_seconds < 60.0 {
        RuntimeClass::SubMinute
    } else if predicted_seconds < 3600.0 {
        RuntimeClass::Minutes
    } else {
        RuntimeClass::Warning
    };
    RuntimeEstimate { complexity, predicted_seconds, class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{verify_identity, SampleKind};

    fn perm(n: u32, e: &[u32]) -> Permutation {
        Permutation::new(n, e.to_vec()).unwrap()
    }

    #[test]
    fn two_bit_search() {
        assert!(search_two_bit(&Permutation::identity(2)).unwrap().is_empty());
        assert_eq!(search_two_bit(&perm(2, &[1, 0, 3, 2])).unwrap().gates(), &[Gate::x(2, 2)]);
        assert_eq!(search_two_bit(&perm(2, &[0, 1, 3, 2])).unwrap().gates(), &[Gate::cx(2, 1, 2)]);
        let mut e = vec![0u32, 1, 2, 3];
        // every 2-bit permutation is solved in at most a handful of gates
        for _ in 0..24 {
            let p = perm(2, &e);
            let s = search_two_bit(&p).unwrap();
            assert!(verify_identity(&p, &s).unwrap());
            next_permutation(&mut e);
        }
    }

    fn next_permutation(v: &mut [u32]) {
        let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
            v.reverse();
            return;
        };
        let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
        v.swap(i, j);
        v[i + 1..].reverse();
    }

    #[test]
    fn identity_synthesizes_to_nothing() {
        for n in 1..=6 {
            let (c, _) = synthesize(&Permutation::identity(n), &SynthesisConfig::default()).unwrap();
            assert!(c.is_empty(), "n = {n}");
        }
    }

    #[test]
    fn small_example() {
        let p = perm(3, &[7, 2, 0, 1, 5, 3, 6, 4]);
        let (c, report) = synthesize(&p, &SynthesisConfig::default()).unwrap();
        assert!(verify_identity(&p, &c).unwrap());
        assert_eq!(report.toffoli_total, toffoli_count(&c));
        assert!(report.toffoli_total <= reduction::total_bound(3));
        for x in 0..8 {
            assert_eq!(c.execute(x), p.row(x));
        }
    }

    #[test]
    fn width_one() {
        let (c, _) = synthesize(&perm(1, &[1, 0]), &SynthesisConfig::default()).unwrap();
        assert_eq!(c.gates(), &[Gate::x(1, 1)]);
    }

    #[test]
    fn lookahead_depth_zero_is_plain() {
        let cfg = SynthesisConfig::uniform_depth(0);
        for seed in 0..10 {
            let p = Permutation::sample(5, seed, SampleKind::ParityAligned);
            for i in [0usize, 3, 7] {
                if block_at(&p, i).is_some() {
                    continue;
                }
                assert_eq!(select_with_lookahead(&p, i, &cfg, Phase::AllNormal), reduction::pick(&p, i));
            }
        }
    }

    #[test]
    fn lookahead_depth_one_minimizes_step_cost() {
        let p = perm(3, &[0, 1, 6, 3, 2, 5, 4, 7]);
        let cfg = SynthesisConfig::uniform_depth(1);
        let chosen = select_with_lookahead(&p, 1, &cfg, Phase::AllNormal).unwrap();
        let cost_of = |pair| toffoli_count(&construct_and_allocate(&p, 1, pair).unwrap().gates);
        let min = admissible_pairs(&p, 1, Phase::AllNormal).unwrap().into_iter().map(cost_of).min().unwrap();
        assert_eq!(cost_of(chosen), min);
        assert_eq!(min, 1);
    }

    #[test]
    fn depth_schedule() {
        let mut cfg = SynthesisConfig::default();
        cfg.depths.insert(3, 2);
        assert_eq!(cfg.depth_for_remaining(8), 2);
        assert_eq!(cfg.depth_for_remaining(5), 2);
        assert_eq!(cfg.depth_for_remaining(4), 1);
        assert_eq!(cfg.depth_for_remaining(9), 1);
        // the last nine positions of width 8 are exhaustive
        assert_eq!(cfg.depth_at(8, 119, Phase::InvertedPart), 9);
        assert_eq!(cfg.depth_at(8, 118, Phase::InvertedPart), 1);
    }

    #[test]
    fn runtime_classes() {
        let e = estimate_runtime_class(8, 0);
        assert_eq!(e.complexity, "O(n·2^{2n})");
        assert_eq!(e.class, RuntimeClass::SubMinute);
        assert_eq!(estimate_runtime_class(8, 4).class, RuntimeClass::Warning);
        // calibrated against measured depth-0 runs, which finish in about a second at n = 11
        assert_eq!(estimate_runtime_class(11, 0).class, RuntimeClass::SubMinute);
        for n in 3..12 {
            for d in 0..4 {
                assert!(
                    estimate_runtime_class(n, d).predicted_seconds < estimate_runtime_class(n, d + 1).predicted_seconds
                );
            }
        }
    }
}
