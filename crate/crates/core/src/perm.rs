//! Permutations in one-line notation, multiple-controlled Toffoli gates, and
//! the column-exchange semantics that ties them together.
//!
//! # Bit order
//!
//! Line 1 is the **most significant** bit of a column number and line `n`
//! the least significant one. With this convention `X_1` swaps the two halves
//! of the one-line array and any gate targeting line `n` only exchanges
//! neighbouring columns `2i` and `2i + 1`. Most circuit formats number lines
//! the other way round, so take care when importing foreign circuits.
//!
//! # Semantics
//!
//! A permutation `(r_0, ..., r_{2^n - 1})` stores row number `r_c` in column
//! `c`. Applying a gate exchanges the row numbers held by every pair of
//! columns `c`, `c ^ t` whose bits satisfy the gate's controls, where `t` is
//! the target bit. This is the matrix product `P · g`.
//!
//! A sequence `R = (g_1, ..., g_k)` with `P · g_1 ⋯ g_k = I` computes `P` when
//! executed left to right as a circuit: `g_k(⋯ g_1(x)) = P(x)`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest permutation width; keeps `2^n` arrays addressable.
pub const MAX_WIDTH: u32 = 24;

/// Largest gate / circuit width. Wider than [`MAX_WIDTH`] so that expanded
/// circuits with appended work lines still fit.
pub const MAX_GATE_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("width {0} is outside the supported range")]
    WidthOutOfRange(u32),
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: u32, found: u32 },
    #[error("expected {expected} entries, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("entries are not a bijection: value {0} is repeated or out of range")]
    NotABijection(u32),
    #[error("permutation is not of the form Q ⊗ I_2 (violated at block-wise position {0})")]
    NotReducible(usize),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
}

#[inline]
pub(crate) fn line_bit(width: u32, line: u32) -> u32 {
    1u32 << (width - line)
}

/// Line index (1-based, MSB first) of the most significant set bit of `mask`.
#[inline]
pub(crate) fn top_line(width: u32, mask: u32) -> u32 {
    debug_assert!(mask != 0);
    width - (31 - mask.leading_zeros())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A control line together with its polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Control {
    pub line: u32,
    pub polarity: Polarity,
}

impl Control {
    pub fn pos(line: u32) -> Self {
        Control { line, polarity: Polarity::Positive }
    }

    pub fn neg(line: u32) -> Self {
        Control { line, polarity: Polarity::Negative }
    }
}

/// One multiple-controlled Toffoli gate `C^m X` with per-control polarity.
///
/// Controls are stored as column-bit masks, so testing whether a column
/// activates the gate is two mask operations.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    width: u32,
    target: u32,
    pos: u32,
    neg: u32,
}

impl Gate {
    pub fn new(width: u32, target: u32, controls: impl IntoIterator<Item = Control>) -> Result<Self, PermError> {
        if width == 0 || width > MAX_GATE_WIDTH {
            return Err(PermError::WidthOutOfRange(width));
        }
        if target == 0 || target > width {
            return Err(PermError::InvalidGate(format!("target line {target} outside 1..={width}")));
        }
        let mut pos = 0u32;
        let mut neg = 0u32;
        for c in controls {
            if c.line == 0 || c.line > width {
                return Err(PermError::InvalidGate(format!("control line {} outside 1..={width}", c.line)));
            }
            if c.line == target {
                return Err(PermError::InvalidGate(format!("line {target} is both control and target")));
            }
            let bit = line_bit(width, c.line);
            if (pos | neg) & bit != 0 {
                return Err(PermError::InvalidGate(format!("control line {} repeated", c.line)));
            }
            match c.polarity {
                Polarity::Positive => pos |= bit,
                Polarity::Negative => neg |= bit,
            }
        }
        Ok(Gate { width, target, pos, neg })
    }

    /// Builds a gate from raw column-bit masks. Callers guarantee validity.
    pub(crate) fn from_masks(width: u32, target: u32, pos: u32, neg: u32) -> Self {
        debug_assert!(target >= 1 && target <= width);
        debug_assert_eq!(pos & neg, 0);
        debug_assert_eq!((pos | neg) & line_bit(width, target), 0);
        Gate { width, target, pos, neg }
    }

    /// `X_t`. Panics on an invalid line.
    pub fn x(width: u32, target: u32) -> Self {
        Gate::new(width, target, []).expect("invalid NOT gate")
    }

    /// `CX_{ct}` with a positive control. Panics on invalid lines.
    pub fn cx(width: u32, control: u32, target: u32) -> Self {
        Gate::new(width, target, [Control::pos(control)]).expect("invalid CNOT gate")
    }

    /// `CX_{abt}` (Toffoli). Panics on invalid lines.
    pub fn ccx(width: u32, a: u32, b: u32, target: u32) -> Self {
        Gate::new(width, target, [Control::pos(a), Control::pos(b)]).expect("invalid Toffoli gate")
    }

    /// `CX_{I:t}` with positive controls on every line of `controls`.
    /// Panics on invalid lines.
    pub fn mct(width: u32, controls: &[u32], target: u32) -> Self {
        Gate::new(width, target, controls.iter().map(|&l| Control::pos(l))).expect("invalid MCT gate")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    /// Controls in ascending line order.
    pub fn controls(&self) -> Vec<Control> {
        (1..=self.width)
            .filter_map(|line| {
                let bit = line_bit(self.width, line);
                if self.pos & bit != 0 {
                    Some(Control::pos(line))
                } else if self.neg & bit != 0 {
                    Some(Control::neg(line))
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn control_count(&self) -> u32 {
        (self.pos | self.neg).count_ones()
    }

    pub fn has_negative_controls(&self) -> bool {
        self.neg != 0
    }

    /// True when every other line controls the gate (a single transposition).
    pub fn is_fully_controlled(&self) -> bool {
        self.control_count() + 1 == self.width
    }

    #[inline]
    pub fn target_mask(&self) -> u32 {
        line_bit(self.width, self.target)
    }

    /// Whether column `col` satisfies every control.
    #[inline]
    pub fn matches(&self, col: u32) -> bool {
        (col & self.pos) == self.pos && (col & self.neg) == 0
    }

    /// Where the gate sends column (or input) `col`.
    #[inline]
    pub fn map(&self, col: u32) -> u32 {
        if self.matches(col) {
            col ^ self.target_mask()
        } else {
            col
        }
    }

    /// The same gate acting on the top lines of a wider register.
    pub fn widen(&self, width: u32) -> Result<Self, PermError> {
        if width < self.width || width > MAX_GATE_WIDTH {
            return Err(PermError::WidthOutOfRange(width));
        }
        let shift = width - self.width;
        Ok(Gate { width, target: self.target, pos: self.pos << shift, neg: self.neg << shift })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let controls = self.controls();
        if controls.is_empty() {
            return write!(f, "X{}", self.target);
        }
        write!(f, "CX[")?;
        for (k, c) in controls.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            if c.polarity == Polarity::Negative {
                write!(f, "~")?;
            }
            write!(f, "{}", c.line)?;
        }
        write!(f, ":{}]", self.target)
    }
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An ordered list of gates of a common width.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GateSequence {
    width: u32,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(width: u32) -> Self {
        GateSequence { width, gates: Vec::new() }
    }

    pub fn from_gates(width: u32, gates: Vec<Gate>) -> Result<Self, PermError> {
        if let Some(g) = gates.iter().find(|g| g.width != width) {
            return Err(PermError::WidthMismatch { expected: width, found: g.width });
        }
        Ok(GateSequence { width, gates })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Gate> {
        self.gates.iter()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), PermError> {
        if gate.width != self.width {
            return Err(PermError::WidthMismatch { expected: self.width, found: gate.width });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate) {
        debug_assert_eq!(gate.width, self.width);
        self.gates.push(gate);
    }

    /// Appends `other` (the `(R;S)` concatenation).
    pub fn append(&mut self, other: &GateSequence) -> Result<(), PermError> {
        if other.width != self.width {
            return Err(PermError::WidthMismatch { expected: self.width, found: other.width });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// Every gate re-expressed on a register of `width` lines; new lines are
    /// appended below line `self.width()` and act as identity wires.
    pub fn widen(&self, width: u32) -> Result<Self, PermError> {
        let gates = self.gates.iter().map(|g| g.widen(width)).collect::<Result<Vec<_>, _>>()?;
        Ok(GateSequence { width, gates })
    }

    /// Runs the gates left to right on input `x`.
    pub fn execute(&self, x: u32) -> u32 {
        self.gates.iter().fold(x, |acc, g| g.map(acc))
    }

    /// The map computed by executing the sequence left to right.
    pub fn function(&self) -> Result<Permutation, PermError> {
        if self.width > MAX_WIDTH {
            return Err(PermError::WidthOutOfRange(self.width));
        }
        let entries = (0..1u32 << self.width).map(|x| self.execute(x)).collect();
        Permutation::new(self.width, entries)
    }

    /// Cancels adjacent identical gates, repeatedly.
    pub fn peephole(&self) -> Self {
        let mut out: Vec<Gate> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            if out.last() == Some(g) {
                out.pop();
            } else {
                out.push(*g);
            }
        }
        GateSequence { width: self.width, gates: out }
    }

    pub fn reversed(&self) -> Self {
        let mut gates = self.gates.clone();
        gates.reverse();
        GateSequence { width: self.width, gates }
    }
}

impl fmt::Debug for GateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GateSequence<{}>{:?}", self.width, self.gates)
    }
}

impl<'a> IntoIterator for &'a GateSequence {
    type Item = &'a Gate;
    type IntoIter = std::slice::Iter<'a, Gate>;

    fn into_iter(self) -> Self::IntoIter {
        self.gates.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleKind {
    Uniform,
    /// Every row number sits at a column of the same parity.
    ParityAligned,
}

/// An `n`-bit permutation in one-line notation.
///
/// The column of every row number is cached alongside the entries.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    width: u32,
    entries: Vec<u32>,
    columns: Vec<u32>,
}

impl Permutation {
    pub fn new(width: u32, entries: Vec<u32>) -> Result<Self, PermError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(PermError::WidthOutOfRange(width));
        }
        let len = 1usize << width;
        if entries.len() != len {
            return Err(PermError::WrongCount { expected: len, found: entries.len() });
        }
        let mut columns = vec![u32::MAX; len];
        for (col, &row) in entries.iter().enumerate() {
            if row as usize >= len || columns[row as usize] != u32::MAX {
                return Err(PermError::NotABijection(row));
            }
            columns[row as usize] = col as u32;
        }
        Ok(Permutation { width, entries, columns })
    }

    /// Panics if `width` is outside `1..=MAX_WIDTH`.
    pub fn identity(width: u32) -> Self {
        assert!((1..=MAX_WIDTH).contains(&width), "width {width} out of range");
        let entries: Vec<u32> = (0..1u32 << width).collect();
        Permutation { width, columns: entries.clone(), entries }
    }

    /// A seeded pseudorandom permutation. Deterministic for fixed
    /// `(width, seed, kind)`. Panics if `width` is out of range.
    pub fn sample(width: u32, seed: u64, kind: SampleKind) -> Self {
        assert!((1..=MAX_WIDTH).contains(&width), "width {width} out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 1u32 << width;
        let entries = match kind {
            SampleKind::Uniform => {
                let mut v: Vec<u32> = (0..len).collect();
                v.shuffle(&mut rng);
                v
            }
            SampleKind::ParityAligned => {
                let mut evens: Vec<u32> = (0..len).step_by(2).collect();
                let mut odds: Vec<u32> = (1..len).step_by(2).collect();
                evens.shuffle(&mut rng);
                odds.shuffle(&mut rng);
                evens.into_iter().zip(odds).flat_map(|(e, o)| [e, o]).collect()
            }
        };
        Permutation::new(width, entries).expect("shuffle preserves bijectivity")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<u32> {
        self.entries
    }

    /// Row number held by column `col`.
    #[inline]
    pub fn row(&self, col: u32) -> u32 {
        self.entries[col as usize]
    }

    /// Column currently holding row number `row`.
    #[inline]
    pub fn column_of(&self, row: u32) -> u32 {
        self.columns[row as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().enumerate().all(|(c, &r)| c as u32 == r)
    }

    pub fn inverse(&self) -> Self {
        Permutation { width: self.width, entries: self.columns.clone(), columns: self.entries.clone() }
    }

    /// `self · gate`, checked.
    pub fn apply_gate(&self, gate: &Gate) -> Result<Self, PermError> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &Gate) -> Result<(), PermError> {
        if gate.width != self.width {
            return Err(PermError::WidthMismatch { expected: self.width, found: gate.width });
        }
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn apply_sequence_mut(&mut self, seq: &GateSequence) -> Result<(), PermError> {
        if seq.width != self.width {
            return Err(PermError::WidthMismatch { expected: self.width, found: seq.width });
        }
        for g in &seq.gates {
            self.apply_unchecked(g);
        }
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        let t = gate.target_mask();
        let full = (1u32 << self.width) - 1;
        let free = full & !(gate.pos | gate.neg | t);
        // enumerate the submasks of `free` in ascending order
        let mut s = 0u32;
        loop {
            let c = s | gate.pos;
            let d = c | t;
            let (rc, rd) = (self.entries[c as usize], self.entries[d as usize]);
            self.entries[c as usize] = rd;
            self.entries[d as usize] = rc;
            self.columns[rd as usize] = c;
            self.columns[rc as usize] = d;
            if s == free {
                break;
            }
            s = s.wrapping_sub(free) & free;
        }
    }

    pub fn parity(&self) -> Parity {
        let mut seen = vec![false; self.entries.len()];
        let mut cycles = 0usize;
        for start in 0..self.entries.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut c = start;
            while !seen[c] {
                seen[c] = true;
                c = self.entries[c] as usize;
            }
        }
        if (self.entries.len() - cycles).is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Whether the permutation has the form `Q ⊗ I_2`.
    pub fn is_reducible(&self) -> bool {
        self.entries.chunks_exact(2).all(|p| p[0] % 2 == 0 && p[1] == p[0] + 1)
    }

    /// Returns `Q` such that `self = Q ⊗ I_2`.
    pub fn reduce_width(&self) -> Result<Self, PermError> {
        if self.width < 2 {
            return Err(PermError::WidthOutOfRange(self.width - 1));
        }
        let mut entries = Vec::with_capacity(self.entries.len() / 2);
        for (i, p) in self.entries.chunks_exact(2).enumerate() {
            if p[0] % 2 != 0 || p[1] != p[0] + 1 {
                return Err(PermError::NotReducible(i));
            }
            entries.push(p[0] / 2);
        }
        Permutation::new(self.width - 1, entries)
    }

    /// `self ⊗ I_2`: one more line, the new least significant line idle.
    pub fn tensor_identity(&self) -> Result<Self, PermError> {
        if self.width + 1 > MAX_WIDTH {
            return Err(PermError::WidthOutOfRange(self.width + 1));
        }
        let entries = self.entries.iter().flat_map(|&r| [2 * r, 2 * r + 1]).collect();
        Permutation::new(self.width + 1, entries)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation<{}>{:?}", self.width, self.entries)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, r) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

pub fn apply_gate(perm: &Permutation, gate: &Gate) -> Result<Permutation, PermError> {
    perm.apply_gate(gate)
}

/// `(P, R) · S = (P · s_1 ⋯ s_k, (R; S))`.
pub fn apply_sequence(
    perm: &Permutation,
    acc: &GateSequence,
    seq: &GateSequence,
) -> Result<(Permutation, GateSequence), PermError> {
    if acc.width != perm.width {
        return Err(PermError::WidthMismatch { expected: perm.width, found: acc.width });
    }
    let mut p = perm.clone();
    p.apply_sequence_mut(seq)?;
    let mut r = acc.clone();
    r.append(seq)?;
    Ok((p, r))
}

/// True iff `perm · seq = I`; equivalently `seq`, run left to right,
/// computes `perm`.
pub fn verify_identity(perm: &Permutation, seq: &GateSequence) -> Result<bool, PermError> {
    let mut p = perm.clone();
    p.apply_sequence_mut(seq)?;
    Ok(p.is_identity())
}

pub fn parity(perm: &Permutation) -> Parity {
    perm.parity()
}

pub fn reduce_width(perm: &Permutation) -> Result<Permutation, PermError> {
    perm.reduce_width()
}

pub fn sample(width: u32, seed: u64, kind: SampleKind) -> Permutation {
    Permutation::sample(width, seed, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Permutation {
        Permutation::new(3, vec![7, 2, 0, 1, 5, 3, 6, 4]).unwrap()
    }

    #[test]
    fn worked_gate_actions() {
        let p = p3();
        assert_eq!(p.apply_gate(&Gate::x(3, 1)).unwrap().entries(), &[5, 3, 6, 4, 7, 2, 0, 1]);
        assert_eq!(p.apply_gate(&Gate::cx(3, 2, 1)).unwrap().entries(), &[7, 2, 6, 4, 5, 3, 0, 1]);
        assert_eq!(p.apply_gate(&Gate::ccx(3, 3, 1, 2)).unwrap().entries(), &[7, 2, 0, 1, 5, 4, 6, 3]);
    }

    #[test]
    fn apply_sequence_examples() {
        let p = p3();
        let x1 = GateSequence::from_gates(3, vec![Gate::x(3, 1)]).unwrap();
        let (q, r) = apply_sequence(&p, &GateSequence::new(3), &x1).unwrap();
        assert_eq!(q.entries(), &[5, 3, 6, 4, 7, 2, 0, 1]);
        assert_eq!(r, x1);

        let (q, r) = apply_sequence(&p, &x1, &GateSequence::new(3)).unwrap();
        assert_eq!((q, r), (p.clone(), x1.clone()));

        let twice = GateSequence::from_gates(3, vec![Gate::cx(3, 1, 2); 2]).unwrap();
        let (q, r) = apply_sequence(&Permutation::identity(3), &GateSequence::new(3), &twice).unwrap();
        assert!(q.is_identity());
        assert_eq!(r, twice);
    }

    #[test]
    fn five_gate_circuit_verifies() {
        let seq = GateSequence::from_gates(
            3,
            vec![Gate::cx(3, 1, 3), Gate::ccx(3, 3, 1, 2), Gate::x(3, 2), Gate::cx(3, 2, 3), Gate::ccx(3, 2, 3, 1)],
        )
        .unwrap();
        assert!(verify_identity(&p3(), &seq).unwrap());
        // executed left to right the same gates compute the permutation
        for x in 0..8 {
            assert_eq!(seq.execute(x), p3().row(x));
        }
        assert!(verify_identity(&Permutation::identity(4), &GateSequence::new(4)).unwrap());
        let one = GateSequence::from_gates(3, vec![Gate::x(3, 1)]).unwrap();
        assert!(!verify_identity(&p3(), &one).unwrap());
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let err = p3().apply_gate(&Gate::x(4, 1)).unwrap_err();
        assert_eq!(err, PermError::WidthMismatch { expected: 3, found: 4 });
        assert!(verify_identity(&p3(), &GateSequence::new(2)).is_err());
    }

    #[test]
    fn invalid_gates_rejected() {
        assert!(Gate::new(3, 2, [Control::pos(2)]).is_err());
        assert!(Gate::new(3, 4, []).is_err());
        assert!(Gate::new(3, 1, [Control::pos(2), Control::neg(2)]).is_err());
        assert!(Gate::new(3, 1, [Control::pos(0)]).is_err());
    }

    #[test]
    fn parity_examples() {
        assert_eq!(Permutation::identity(3).parity(), Parity::Even);
        let t = Permutation::new(3, vec![1, 0, 2, 3, 4, 5, 6, 7]).unwrap();
        assert_eq!(t.parity(), Parity::Odd);
        assert_eq!(p3().parity(), Parity::Even);
    }

    #[test]
    fn reduce_width_examples() {
        let q = Permutation::new(2, vec![0, 1, 2, 3]).unwrap().reduce_width().unwrap();
        assert_eq!(q.entries(), &[0, 1]);
        let q = Permutation::new(3, vec![4, 5, 6, 7, 0, 1, 2, 3]).unwrap().reduce_width().unwrap();
        assert_eq!(q.entries(), &[2, 3, 0, 1]);
        assert_eq!(q.tensor_identity().unwrap().entries(), &[4, 5, 6, 7, 0, 1, 2, 3]);
        let bad = Permutation::new(2, vec![0, 1, 3, 2]).unwrap();
        assert_eq!(bad.reduce_width().unwrap_err(), PermError::NotReducible(1));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Permutation::new(2, vec![0, 0, 1, 2]).unwrap_err(), PermError::NotABijection(0));
        assert_eq!(Permutation::new(2, vec![0, 1, 2]).unwrap_err(), PermError::WrongCount { expected: 4, found: 3 });
        assert!(Permutation::new(0, vec![0]).is_err());
    }

    #[test]
    fn sampling() {
        let a = sample(3, 11, SampleKind::ParityAligned);
        assert!(a.entries().iter().enumerate().all(|(c, &r)| (c as u32 ^ r) & 1 == 0));
        assert_eq!(sample(6, 5, SampleKind::Uniform), sample(6, 5, SampleKind::Uniform));
        assert_ne!(sample(6, 5, SampleKind::Uniform), sample(6, 6, SampleKind::Uniform));
        let big = sample(8, 3, SampleKind::Uniform);
        let mut sorted = big.entries().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..256).collect::<Vec<_>>());
    }

    #[test]
    fn peephole_cancels_nested_pairs() {
        let g = |t| Gate::x(3, t);
        let seq = GateSequence::from_gates(3, vec![g(1), g(2), g(2), g(1), g(3)]).unwrap();
        assert_eq!(seq.peephole().gates(), &[g(3)]);
    }

    #[test]
    fn widen_keeps_top_lines() {
        let g = Gate::ccx(3, 1, 3, 2).widen(5).unwrap();
        assert_eq!(g.target(), 2);
        assert_eq!(g.controls(), vec![Control::pos(1), Control::pos(3)]);
        let p = Permutation::new(2, vec![3, 0, 2, 1]).unwrap();
        let seq = GateSequence::from_gates(2, vec![Gate::cx(2, 1, 2), Gate::x(2, 1)]).unwrap();
        let lhs = p.apply_gate(&seq.gates()[0]).unwrap().apply_gate(&seq.gates()[1]).unwrap();
        let wide = seq.widen(3).unwrap();
        let mut rhs = p.tensor_identity().unwrap();
        rhs.apply_sequence_mut(&wide).unwrap();
        assert_eq!(rhs, lhs.tensor_identity().unwrap());
    }
}
