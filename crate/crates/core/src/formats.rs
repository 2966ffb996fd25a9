//! Text formats: permutations, truth tables, `.real` circuits and reports.
//!
//! `.real` files number their variables `x1 … xn` in the same order as the
//! lines used here, so `x1` is the most significant bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

use crate::perm::{Control, Gate, GateSequence, PermError, Permutation, Polarity, MAX_GATE_WIDTH, MAX_WIDTH};
use crate::synthesis::{StageReport, StageRoute, SynthesisReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("malformed integer `{0}`")]
    MalformedInteger(String),
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("expected {expected} values, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("output value {value} does not fit in {bits} bits")]
    OutputOutOfRange { value: u64, bits: u32 },
    #[error("output value {value} occurs more than {limit} times")]
    Unbalanced { value: u64, limit: usize },
    #[error("{n_out} outputs cannot be embedded into {n_in} lines")]
    MoreOutputsThanInputs { n_in: u32, n_out: u32 },
    #[error("line {line}: unknown directive `{directive}`")]
    UnknownDirective { line: usize, directive: String },
    #[error("line {line}: unknown line name `{name}`")]
    UnknownLineName { line: usize, name: String },
    #[error("line {line}: gate `{gate}` lists {found} lines")]
    ArityMismatch { line: usize, gate: String, found: usize },
    #[error("line {line}: unsupported gate `{gate}`")]
    UnsupportedGate { line: usize, gate: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("report field `{0}` is missing or malformed")]
    ReportField(String),
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines().flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace())
}

fn parse_u64(tok: &str) -> Result<u64, FormatError> {
    tok.parse().map_err(|_| FormatError::MalformedInteger(tok.to_string()))
}

/// Reads `n` followed by `2^n` row numbers; `#` starts a comment.
pub fn read_permutation(text: &str) -> Result<Permutation, FormatError> {
    let mut it = tokens(text);
    let n = parse_u64(it.next().ok_or(FormatError::UnexpectedEof)?)?;
    if n == 0 || n > MAX_WIDTH as u64 {
        return Err(PermError::WidthOutOfRange(n.min(u32::MAX as u64) as u32).into());
    }
    let entries = it
        .map(|t| parse_u64(t).and_then(|v| u32::try_from(v).map_err(|_| FormatError::MalformedInteger(t.to_string()))))
        .collect::<Result<Vec<u32>, _>>()?;
    Ok(Permutation::new(n as u32, entries)?)
}

/// Canonical form: width on the first line, then 16 entries per line.
pub fn write_permutation(perm: &Permutation) -> String {
    let mut out = format!("{}\n", perm.width());
    for chunk in perm.entries().chunks(16) {
        let line: Vec<String> = chunk.iter().map(u32::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub n_in: u32,
    pub n_out: u32,
    pub rows: Vec<u64>,
}

impl TruthTable {
    pub fn new(n_in: u32, n_out: u32, rows: Vec<u64>) -> Result<Self, FormatError> {
        if n_in == 0 || n_in > MAX_WIDTH {
            return Err(PermError::WidthOutOfRange(n_in).into());
        }
        if n_out == 0 || n_out > 63 {
            return Err(PermError::WidthOutOfRange(n_out).into());
        }
        if rows.len() != 1 << n_in {
            return Err(FormatError::WrongCount { expected: 1 << n_in, found: rows.len() });
        }
        if let Some(&value) = rows.iter().find(|&&v| v >> n_out != 0) {
            return Err(FormatError::OutputOutOfRange { value, bits: n_out });
        }
        Ok(TruthTable { n_in, n_out, rows })
    }
}

/// Reads `n_in n_out` followed by `2^{n_in}` output values.
pub fn read_truth_table(text: &str) -> Result<TruthTable, FormatError> {
    let mut it = tokens(text);
    let n_in = parse_u64(it.next().ok_or(FormatError::UnexpectedEof)?)?;
    let n_out = parse_u64(it.next().ok_or(FormatError::UnexpectedEof)?)?;
    let rows = it.map(parse_u64).collect::<Result<Vec<_>, _>>()?;
    let narrow = |v: u64| u32::try_from(v).unwrap_or(u32::MAX);
    TruthTable::new(narrow(n_in), narrow(n_out), rows)
}

pub fn write_truth_table(tt: &TruthTable) -> String {
    let mut out = format!("{} {}\n", tt.n_in, tt.n_out);
    for chunk in tt.rows.chunks(16) {
        let line: Vec<String> = chunk.iter().map(u64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Embeds `tt` into a permutation of width `n_in`: input `x` maps to
/// `f(x) · 2^g + k(x)` where `g = n_in - n_out` and `k(x)` counts earlier
/// inputs with the same output. Returns the permutation and `g`.
pub fn embed_truth_table(tt: &TruthTable) -> Result<(Permutation, u32), FormatError> {
    let garbage =
        tt.n_in.checked_sub(tt.n_out).ok_or(FormatError::MoreOutputsThanInputs { n_in: tt.n_in, n_out: tt.n_out })?;
    let limit = 1usize << garbage;
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut entries = Vec::with_capacity(tt.rows.len());
    for &v in &tt.rows {
        let k = seen.entry(v).or_insert(0);
        if *k >= limit {
            return Err(FormatError::Unbalanced { value: v, limit });
        }
        entries.push(((v << garbage) | *k as u64) as u32);
        *k += 1;
    }
    Ok((Permutation::new(tt.n_in, entries)?, garbage))
}

/// A parsed `.real` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitFile {
    pub variables: Vec<String>,
    pub constants: Option<String>,
    pub garbage: Option<String>,
    pub gates: Vec<Gate>,
}

impl CircuitFile {
    pub fn to_sequence(&self) -> Result<GateSequence, FormatError> {
        Ok(GateSequence::from_gates(self.variables.len() as u32, self.gates.clone())?)
    }
}

/// Writes the circuit with positive-control gates only; each negative
/// control becomes a pair of `t1` gates around the gate.
pub fn write_real(seq: &GateSequence) -> String {
    let n = seq.width();
    let name = |l: u32| format!("x{l}");
    let mut out = String::new();
    let vars: Vec<String> = (1..=n).map(name).collect();
    let _ = writeln!(out, ".version 2.0");
    let _ = writeln!(out, ".numvars {n}");
    let _ = writeln!(out, ".variables {}", vars.join(" "));
    let _ = writeln!(out, ".begin");
    for g in seq {
        let controls = g.controls();
        let negated: Vec<u32> = controls.iter().filter(|c| c.polarity == Polarity::Negative).map(|c| c.line).collect();
        for &l in &negated {
            let _ = writeln!(out, "t1 {}", name(l));
        }
        let mut names: Vec<String> = controls.iter().map(|c| name(c.line)).collect();
        names.push(name(g.target()));
        let _ = writeln!(out, "t{} {}", names.len(), names.join(" "));
        for &l in &negated {
            let _ = writeln!(out, "t1 {}", name(l));
        }
    }
    let _ = writeln!(out, ".end");
    out
}

pub fn parse_real(text: &str) -> Result<CircuitFile, FormatError> {
    let mut variables: Vec<String> = Vec::new();
    let mut numvars: Option<usize> = None;
    let mut constants = None;
    let mut garbage = None;
    let mut gates = Vec::new();
    let mut in_body = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().expect("non-empty line");
        let rest: Vec<&str> = fields.collect();
        if let Some(directive) = head.strip_prefix('.') {
            match directive {
                "version" | "inputs" | "outputs" | "inputbus" | "outputbus" | "state" | "module" => {}
                "numvars" => {
                    let v = rest
                        .first()
                        .ok_or(FormatError::Syntax { line: line_no, message: ".numvars needs a value".into() })?;
                    numvars = Some(parse_u64(v)? as usize);
                }
                "variables" => variables = rest.iter().map(|s| s.to_string()).collect(),
                "constants" => constants = rest.first().map(|s| s.to_string()),
                "garbage" => garbage = rest.first().map(|s| s.to_string()),
                "begin" => in_body = true,
                "end" => in_body = false,
                other => return Err(FormatError::UnknownDirective { line: line_no, directive: format!(".{other}") }),
            }
            continue;
        }
        if !in_body {
            return Err(FormatError::Syntax { line: line_no, message: format!("gate `{head}` outside .begin/.end") });
        }
        let arity: usize = match head.strip_prefix('t').or_else(|| head.strip_prefix('T')) {
            Some(k) => k.parse().map_err(|_| FormatError::UnsupportedGate { line: line_no, gate: head.into() })?,
            None => return Err(FormatError::UnsupportedGate { line: line_no, gate: head.into() }),
        };
        if arity == 0 || arity != rest.len() {
            return Err(FormatError::ArityMismatch { line: line_no, gate: head.into(), found: rest.len() });
        }
        let width = variables.len() as u32;
        if width == 0 || width > MAX_GATE_WIDTH {
            return Err(FormatError::Perm(PermError::WidthOutOfRange(width)));
        }
        let index = |name: &str| -> Result<u32, FormatError> {
            variables
                .iter()
                .position(|v| v == name)
                .map(|p| p as u32 + 1)
                .ok_or(FormatError::UnknownLineName { line: line_no, name: name.into() })
        };
        let lines = rest.iter().map(|s| index(s)).collect::<Result<Vec<_>, _>>()?;
        let (target, controls) = lines.split_last().expect("arity >= 1");
        let gate = Gate::new(width, *target, controls.iter().map(|&l| Control::pos(l)))
            .map_err(|e| FormatError::Syntax { line: line_no, message: e.to_string() })?;
        gates.push(gate);
    }
    if let Some(k) = numvars {
        if k != variables.len() {
            return Err(FormatError::WrongCount { expected: k, found: variables.len() });
        }
    }
    Ok(CircuitFile { variables, constants, garbage, gates })
}

pub fn read_real(text: &str) -> Result<GateSequence, FormatError> {
    parse_real(text)?.to_sequence()
}

/// Flat `key value` lines; per-stage keys are `stage.<width>.<field>`.
pub fn write_report(r: &SynthesisReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} {v}");
    };
    kv("width", r.width.to_string());
    kv("garbage", "0".into());
    kv("gate_count", r.gate_count.to_string());
    kv("toffoli_total", r.toffoli_total.to_string());
    kv("quantum_cost_total", r.quantum_cost_total.to_string());
    kv("cost_table", r.cost_table.clone());
    kv("bound_total", r.bound_total.to_string());
    kv("multi_fixup_stages", r.multi_fixup_stages.to_string());
    kv("base_gates", r.base_gates.to_string());
    kv("config.default_depth", r.default_depth.to_string());
    kv("config.exhaustive_tail", r.exhaustive_tail.to_string());
    kv("config.seed", r.seed.to_string());
    kv("wall_time_ns", r.wall_time.as_nanos().to_string());
    for s in &r.stages {
        let p = format!("stage.{}", s.width);
        kv(&format!("{p}.route"), s.route.as_str().into());
        kv(&format!("{p}.mix_gates"), s.mix_gates.to_string());
        kv(&format!("{p}.mix_depth"), s.mix_depth.map_or("none".into(), |d| d.to_string()));
        kv(&format!("{p}.fixups"), s.fixups.to_string());
        kv(&format!("{p}.pre_gates"), s.pre_gates.to_string());
        kv(&format!("{p}.red_gates"), s.red_gates.to_string());
        kv(&format!("{p}.lifts"), s.lifts.to_string());
        kv(&format!("{p}.free_blocks"), s.free_blocks.to_string());
        kv(&format!("{p}.toffoli"), s.toffoli.to_string());
        kv(&format!("{p}.bound"), s.bound.to_string());
    }
    out
}

pub fn parse_report(text: &str) -> Result<SynthesisReport, FormatError> {
    let map: HashMap<&str, &str> = text
        .lines()
        .filter_map(|l| {
            let l = l.trim();
            let (k, v) = l.split_once(' ')?;
            Some((k, v.trim()))
        })
        .collect();
    fn get<T: std::str::FromStr>(map: &HashMap<&str, &str>, key: &str) -> Result<T, FormatError> {
        map.get(key).and_then(|v| v.parse().ok()).ok_or_else(|| FormatError::ReportField(key.to_string()))
    }
    let width: u32 = get(&map, "width")?;
    let mut stages = Vec::new();
    for w in (3..=width).rev() {
        let p = format!("stage.{w}");
        let route_key = format!("{p}.route");
        let Some(route) = map.get(route_key.as_str()) else {
            continue;
        };
        let route = match *route {
            "skipped" => StageRoute::Skipped,
            "all-normal" => StageRoute::AllNormal,
            "all-inverted" => StageRoute::AllInverted,
            "balanced" => StageRoute::Balanced,
            "full" => StageRoute::Full,
            _ => return Err(FormatError::ReportField(route_key)),
        };
        let depth_key = format!("{p}.mix_depth");
        let mix_depth = match map.get(depth_key.as_str()) {
            Some(&"none") => None,
            Some(v) => Some(v.parse().map_err(|_| FormatError::ReportField(depth_key.clone()))?),
            None => return Err(FormatError::ReportField(depth_key)),
        };
        stages.push(StageReport {
            width: w,
            route,
            mix_gates: get(&map, &format!("{p}.mix_gates"))?,
            mix_depth,
            fixups: get(&map, &format!("{p}.fixups"))?,
            pre_gates: get(&map, &format!("{p}.pre_gates"))?,
            red_gates: get(&map, &format!("{p}.red_gates"))?,
            lifts: get(&map, &format!("{p}.lifts"))?,
            free_blocks: get(&map, &format!("{p}.free_blocks"))?,
            toffoli: get(&map, &format!("{p}.toffoli"))?,
            bound: get(&map, &format!("{p}.bound"))?,
        });
    }
    Ok(SynthesisReport {
        width,
        stages,
        base_gates: get(&map, "base_gates")?,
        gate_count: get(&map, "gate_count")?,
        toffoli_total: get(&map, "toffoli_total")?,
        quantum_cost_total: get(&map, "quantum_cost_total")?,
        bound_total: get(&map, "bound_total")?,
        multi_fixup_stages: get(&map, "multi_fixup_stages")?,
        cost_table: map
            .get("cost_table")
            .map(|s| s.to_string())
            .ok_or(FormatError::ReportField("cost_table".into()))?,
        default_depth: get(&map, "config.default_depth")?,
        exhaustive_tail: get(&map, "config.exhaustive_tail")?,
        seed: get(&map, "config.seed")?,
        wall_time: Duration::from_nanos(get(&map, "wall_time_ns")?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::verify_identity;
    use crate::synthesis::{synthesize, SynthesisConfig};

    #[test]
    fn permutation_round_trip() {
        let p = read_permutation("3\n7 2 0 1 5 3 6 4").unwrap();
        assert_eq!(p.entries(), &[7, 2, 0, 1, 5, 3, 6, 4]);
        let text = write_permutation(&p);
        assert_eq!(read_permutation(&text).unwrap(), p);
        assert_eq!(write_permutation(&read_permutation("# c\n 3 7 2 0 1\n5 3 6 4 # end").unwrap()), text);
        assert!(matches!(read_permutation("2\n0 0 1 2"), Err(FormatError::Perm(PermError::NotABijection(0)))));
        assert!(matches!(read_permutation("2\n0 1 2"), Err(FormatError::Perm(PermError::WrongCount { .. }))));
        assert!(matches!(read_permutation("2\n0 1 x 3"), Err(FormatError::MalformedInteger(_))));
    }

    #[test]
    fn embedding() {
        let id = TruthTable::new(3, 3, (0..8).collect()).unwrap();
        let (p, g) = embed_truth_table(&id).unwrap();
        assert!(p.is_identity());
        assert_eq!(g, 0);
        let constant = TruthTable::new(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(embed_truth_table(&constant), Err(FormatError::Unbalanced { .. })));
        let tt = TruthTable::new(3, 1, vec![1, 0, 0, 1, 1, 0, 0, 1]).unwrap();
        let (p, g) = embed_truth_table(&tt).unwrap();
        assert_eq!(g, 2);
        assert_eq!(p.entries(), &[4, 0, 1, 5, 6, 2, 3, 7]);
        for x in 0..8 {
            assert_eq!((p.row(x) >> g) as u64, tt.rows[x as usize]);
        }
    }

    #[test]
    fn truth_table_text() {
        let tt = read_truth_table("2 1\n0 1 1 0\n").unwrap();
        assert_eq!(tt.rows, vec![0, 1, 1, 0]);
        assert_eq!(read_truth_table(&write_truth_table(&tt)).unwrap(), tt);
        assert!(matches!(read_truth_table("2 1\n0 1 2 0"), Err(FormatError::OutputOutOfRange { .. })));
    }

    #[test]
    fn real_gate_lines() {
        let s = GateSequence::from_gates(3, vec![Gate::x(3, 3), Gate::ccx(3, 1, 2, 3)]).unwrap();
        let text = write_real(&s);
        assert!(text.contains("\nt1 x3\n"));
        assert!(text.contains("\nt3 x1 x2 x3\n"));
        assert!(text.starts_with(".version 2.0\n.numvars 3\n.variables x1 x2 x3\n.begin\n"));
        assert!(text.ends_with(".end\n"));
    }

    #[test]
    fn real_round_trip_five_gates() {
        let s = GateSequence::from_gates(
            3,
            vec![Gate::cx(3, 1, 3), Gate::ccx(3, 3, 1, 2), Gate::x(3, 2), Gate::cx(3, 2, 3), Gate::ccx(3, 2, 3, 1)],
        )
        .unwrap();
        let text = write_real(&s);
        assert_eq!(text.lines().filter(|l| l.starts_with('t')).count(), 5);
        let back = read_real(&text).unwrap();
        let p = Permutation::new(3, vec![7, 2, 0, 1, 5, 3, 6, 4]).unwrap();
        assert!(verify_identity(&p, &back).unwrap());
    }

    #[test]
    fn real_negative_controls_expand() {
        let g = Gate::new(4, 2, [Control::neg(1), Control::pos(4)]).unwrap();
        let s = GateSequence::from_gates(4, vec![g]).unwrap();
        let back = read_real(&write_real(&s)).unwrap();
        assert_eq!(back.len(), 3);
        for x in 0..16 {
            assert_eq!(back.execute(x), s.execute(x));
        }
    }

    #[test]
    fn real_errors() {
        let head = ".version 2.0\n.numvars 2\n.variables a b\n.begin\n";
        assert!(matches!(read_real(&format!("{head}t2 a c\n.end")), Err(FormatError::UnknownLineName { .. })));
        assert!(matches!(read_real(&format!("{head}t3 a b\n.end")), Err(FormatError::ArityMismatch { .. })));
        assert!(matches!(read_real(".model x\n"), Err(FormatError::UnknownDirective { .. })));
        assert!(matches!(read_real(&format!("{head}f2 a b\n.end")), Err(FormatError::UnsupportedGate { .. })));
        let s = read_real(&format!("{head}t2 b a\n.end")).unwrap();
        assert_eq!(s.gates(), &[Gate::cx(2, 2, 1)]);
    }

    #[test]
    fn report_round_trip() {
        let p = Permutation::sample(5, 9, crate::perm::SampleKind::Uniform);
        let (_, r) = synthesize(&p, &SynthesisConfig::default()).unwrap();
        let text = write_report(&r);
        assert!(text.contains(&format!("toffoli_total {}\n", r.toffoli_total)));
        assert!(text.contains("stage.5.bound"));
        assert_eq!(parse_report(&text).unwrap(), r);
        assert_eq!(write_report(&r), text);
    }
}
