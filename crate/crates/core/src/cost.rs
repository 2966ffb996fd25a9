//! Gate-count metrics and MCT expansion into NOT / CNOT / Toffoli gates.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::perm::{Control, Gate, GateSequence, PermError, Polarity, MAX_GATE_WIDTH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("cost table {table} has no entry for {controls} controls")]
    MissingCostEntry { table: String, controls: u32 },
    #[error("cost table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expanded circuit needs {0} lines")]
    TooWide(u32),
    #[error(transparent)]
    Perm(#[from] PermError),
}

/// `Σ (2m - 3)` over gates with `m >= 2` controls.
pub fn toffoli_count(seq: &GateSequence) -> u64 {
    seq.iter().map(gate_toffoli_cost).sum()
}

#[inline]
pub fn gate_toffoli_cost(g: &Gate) -> u64 {
    let m = g.control_count() as u64;
    if m >= 2 {
        2 * m - 3
    } else {
        0
    }
}

/// Number of gates controlled by every other line of the register.
pub fn fully_controlled_count(seq: &GateSequence) -> usize {
    seq.iter().filter(|g| g.is_fully_controlled()).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolarityClass {
    Positive,
    Mixed,
}

/// Per-gate quantum cost keyed by control count and polarity profile.
/// Lookups for mixed-polarity gates fall back to the positive entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    name: String,
    entries: BTreeMap<(u32, PolarityClass), u64>,
}

impl CostTable {
    pub const DEFAULT_NAME: &'static str = "default";

    /// 1 for NOT and CNOT, 5 / 13 / 29 for 2 / 3 / 4 controls, `12m - 22`
    /// above that, listed up to 24 controls.
    pub fn default_table() -> Self {
        let mut entries = BTreeMap::new();
        for m in 0..=24u32 {
            let c = match m {
                0 | 1 => 1,
                2..=4 => (1u64 << (m + 1)) - 3,
                _ => 12 * m as u64 - 22,
            };
            entries.insert((m, PolarityClass::Positive), c);
        }
        CostTable { name: Self::DEFAULT_NAME.to_string(), entries }
    }

    /// Parses lines of `controls cost [pos|mixed]`; `#` starts a comment.
    pub fn parse(name: &str, text: &str) -> Result<Self, CostError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CostError::Parse { line: idx + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(err(format!("expected `controls cost [pos|mixed]`, found `{line}`")));
            }
            let m: u32 = fields[0].parse().map_err(|_| err(format!("bad control count `{}`", fields[0])))?;
            let c: u64 = fields[1].parse().map_err(|_| err(format!("bad cost `{}`", fields[1])))?;
            let class = match fields.get(2).copied() {
                None | Some("pos") => PolarityClass::Positive,
                Some("mixed") => PolarityClass::Mixed,
                Some(other) => return Err(err(format!("unknown polarity class `{other}`"))),
            };
            entries.insert((m, class), c);
        }
        Ok(CostTable { name: name.to_string(), entries })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, controls: u32, class: PolarityClass) -> Option<u64> {
        self.entries.get(&(controls, class)).or_else(|| self.entries.get(&(controls, PolarityClass::Positive))).copied()
    }

    pub fn gate_cost(&self, g: &Gate) -> Result<u64, CostError> {
        let class = if g.has_negative_controls() { PolarityClass::Mixed } else { PolarityClass::Positive };
        self.get(g.control_count(), class)
            .ok_or_else(|| CostError::MissingCostEntry { table: self.name.clone(), controls: g.control_count() })
    }
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable::default_table()
    }
}

pub fn quantum_cost(seq: &GateSequence, table: &CostTable) -> Result<u64, CostError> {
    seq.iter().map(|g| table.gate_cost(g)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExpansionPolicy {
    /// Toffoli ladder onto `m - 2` zeroed work lines, `2m - 3` Toffolis.
    #[default]
    CleanLadder,
    /// One work line in an arbitrary state, `8m - 24` Toffolis for `m >= 5`.
    DirtyAncilla,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionResult {
    pub circuit: GateSequence,
    /// Lines appended after the original ones.
    pub work_lines: u32,
}

pub fn expand_mct(seq: &GateSequence) -> Result<ExpansionResult, CostError> {
    expand_mct_with(seq, ExpansionPolicy::CleanLadder)
}

pub fn expand_mct_with(seq: &GateSequence, policy: ExpansionPolicy) -> Result<ExpansionResult, CostError> {
    let n = seq.width();
    let m_max = seq.iter().map(|g| g.control_count()).max().unwrap_or(0);
    let work_lines = match policy {
        ExpansionPolicy::CleanLadder => m_max.saturating_sub(2),
        ExpansionPolicy::DirtyAncilla => u32::from(m_max >= 3),
    };
    let width = n + work_lines;
    if width > MAX_GATE_WIDTH {
        return Err(CostError::TooWide(width));
    }
    let mut out = GateSequence::new(width);
    let t = |a: u32, b: u32, target: u32| Gate::ccx(width, a, b, target);
    for g in seq {
        let controls = g.controls();
        let negated: Vec<u32> = controls.iter().filter(|c| c.polarity == Polarity::Negative).map(|c| c.line).collect();
        let lines: Vec<u32> = controls.iter().map(|c| c.line).collect();
        for &l in &negated {
            out.push(Gate::x(width, l))?;
        }
        let target = g.target();
        match (lines.len(), policy) {
            (0..=2, _) => out.push(Gate::new(width, target, lines.iter().map(|&l| Control::pos(l)))?)?,
            (m, ExpansionPolicy::CleanLadder) => {
                let w = |k: u32| n + 1 + k;
                let mut ladder = vec![t(lines[0], lines[1], w(0))];
                for (k, &l) in (2u32..).zip(&lines[2..m - 1]) {
                    ladder.push(t(l, w(k - 2), w(k - 1)));
                }
                for g in &ladder {
                    out.push(*g)?;
                }
                out.push(t(lines[m - 1], w(m as u32 - 3), target))?;
                for g in ladder.iter().rev() {
                    out.push(*g)?;
                }
            }
            (_, ExpansionPolicy::DirtyAncilla) => {
                let work = n + 1;
                for g in split_with_dirty_line(width, &lines, target, work) {
                    out.push(g)?;
                }
            }
        }
        for &l in &negated {
            out.push(Gate::x(width, l))?;
        }
    }
    Ok(ExpansionResult { circuit: out, work_lines })
}

/// `C^m X` with one borrowed line: controls split into `A` (the first
/// `⌈(m+1)/2⌉`) and `B`; then `A → work`, `B ∪ {work} → target`, repeated.
/// Each half is a V-chain borrowing lines from the other half.
fn split_with_dirty_line(width: u32, controls: &[u32], target: u32, work: u32) -> Vec<Gate> {
    let m = controls.len();
    let m1 = ((m + 2) / 2).min(m - 1);
    let (a, b) = controls.split_at(m1);
    let mut b_work: Vec<u32> = b.to_vec();
    b_work.push(work);
    let mut a_dirty: Vec<u32> = b.to_vec();
    a_dirty.push(target);
    let b_dirty: Vec<u32> = a.to_vec();
    let first = v_chain(width, a, work, &a_dirty);
    let second = v_chain(width, &b_work, target, &b_dirty);
    let mut out = Vec::new();
    for _ in 0..2 {
        out.extend_from_slice(&first);
        out.extend_from_slice(&second);
    }
    out
}

/// `C^k X` using `k - 2` borrowed lines in arbitrary states, `4(k - 2)`
/// Toffolis; plain gates for `k <= 2`.
fn v_chain(width: u32, controls: &[u32], target: u32, dirty: &[u32]) -> Vec<Gate> {
    let k = controls.len();
    if k <= 2 {
        return vec![Gate::mct(width, controls, target)];
    }
    assert!(dirty.len() >= k - 2, "not enough borrowed lines");
    let x = |i: usize| controls[i - 1];
    let d = |i: usize| dirty[i - 1];
    let t = |a: u32, b: u32, c: u32| Gate::ccx(width, a, b, c);
    // descending half: T(x_k, d_{k-2} → y), T(x_{k-1}, d_{k-3} → d_{k-2}), …, T(x_3, d_1 → d_2)
    let mut down = vec![t(x(k), d(k - 2), target)];
    for i in (3..k).rev() {
        down.push(t(x(i), d(i - 2), d(i - 1)));
    }
    let base = t(x(1), x(2), d(1));
    let mut out = down.clone();
    out.push(base);
    out.extend(down.iter().rev().copied());
    // restore the borrowed lines
    let inner = &down[1..];
    out.extend_from_slice(inner);
    out.push(base);
    out.extend(inner.iter().rev().copied());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(width: u32, gates: Vec<Gate>) -> GateSequence {
        GateSequence::from_gates(width, gates).unwrap()
    }

    fn mct(width: u32, m: u32) -> Gate {
        Gate::mct(width, &(1..=m).collect::<Vec<_>>(), m + 1)
    }

    #[test]
    fn toffoli_examples() {
        let s = seq(3, vec![Gate::x(3, 1), Gate::cx(3, 1, 2), Gate::ccx(3, 1, 2, 3)]);
        assert_eq!(toffoli_count(&s), 1);
        assert_eq!(toffoli_count(&seq(5, vec![mct(5, 4)])), 5);
        assert_eq!(toffoli_count(&seq(6, vec![mct(6, 5), Gate::ccx(6, 1, 2, 3)])), 8);
    }

    #[test]
    fn quantum_cost_examples() {
        let t = CostTable::default_table();
        assert_eq!(quantum_cost(&seq(3, vec![Gate::x(3, 1)]), &t).unwrap(), 1);
        assert_eq!(quantum_cost(&seq(3, vec![Gate::ccx(3, 1, 2, 3)]), &t).unwrap(), 5);
        assert_eq!(quantum_cost(&seq(3, vec![Gate::ccx(3, 1, 2, 3); 4]), &t).unwrap(), 20);
        let neg = Gate::new(3, 2, [Control::neg(1)]).unwrap();
        assert_eq!(quantum_cost(&seq(3, vec![neg]), &t).unwrap(), 1);
        let tiny = CostTable::parse("tiny", "0 1\n1 1 # cnot\n").unwrap();
        assert_eq!(
            quantum_cost(&seq(3, vec![Gate::ccx(3, 1, 2, 3)]), &tiny),
            Err(CostError::MissingCostEntry { table: "tiny".into(), controls: 2 })
        );
    }

    #[test]
    fn cost_table_parsing() {
        let t = CostTable::parse("t", "# header\n2 7\n2 9 mixed\n").unwrap();
        assert_eq!(t.get(2, PolarityClass::Positive), Some(7));
        assert_eq!(t.get(2, PolarityClass::Mixed), Some(9));
        assert!(CostTable::parse("t", "2").is_err());
        assert!(CostTable::parse("t", "2 x").is_err());
        assert!(CostTable::parse("t", "2 3 weird").is_err());
    }

    fn assert_clean_equivalent(g: &Gate) {
        let s = seq(g.width(), vec![*g]);
        let e = expand_mct(&s).unwrap();
        let n = g.width();
        for x in 0..1u32 << n {
            let y = e.circuit.execute(x << e.work_lines);
            assert_eq!(y, g.map(x) << e.work_lines, "gate {g} input {x}");
        }
    }

    #[test]
    fn clean_ladder_shapes() {
        let e = expand_mct(&seq(3, vec![Gate::ccx(3, 1, 2, 3)])).unwrap();
        assert_eq!(e.work_lines, 0);
        assert_eq!(e.circuit.gates(), &[Gate::ccx(3, 1, 2, 3)]);
        let e = expand_mct(&seq(4, vec![mct(4, 3)])).unwrap();
        assert_eq!((e.work_lines, e.circuit.len()), (1, 3));
        let e = expand_mct(&seq(5, vec![mct(5, 4)])).unwrap();
        assert_eq!(e.work_lines, 2);
        assert_eq!(
            e.circuit.gates(),
            &[
                Gate::ccx(7, 1, 2, 6),
                Gate::ccx(7, 3, 6, 7),
                Gate::ccx(7, 4, 7, 5),
                Gate::ccx(7, 3, 6, 7),
                Gate::ccx(7, 1, 2, 6),
            ]
        );
    }

    #[test]
    fn clean_ladder_is_equivalent() {
        for m in 3..=7 {
            let g = mct(m + 1, m);
            assert_clean_equivalent(&g);
            let e = expand_mct(&seq(m + 1, vec![g])).unwrap();
            assert_eq!(e.circuit.len() as u32, 2 * m - 3);
            assert!(e.circuit.iter().all(|h| h.control_count() == 2));
        }
        let mixed = Gate::new(6, 3, [Control::neg(1), Control::pos(2), Control::neg(5), Control::pos(6)]).unwrap();
        assert_clean_equivalent(&mixed);
    }

    #[test]
    fn dirty_ancilla_is_equivalent_for_any_work_state() {
        for m in 3..=8u32 {
            let width = m + 1;
            let g = mct(width, m);
            let e = expand_mct_with(&seq(width, vec![g]), ExpansionPolicy::DirtyAncilla).unwrap();
            assert_eq!(e.work_lines, 1);
            if m >= 5 {
                assert_eq!(toffoli_count(&e.circuit), 8 * m as u64 - 24, "m = {m}");
            }
            for x in 0..1u32 << width {
                for w in 0..2 {
                    assert_eq!(e.circuit.execute(x << 1 | w), g.map(x) << 1 | w, "m = {m}");
                }
            }
        }
    }
}
