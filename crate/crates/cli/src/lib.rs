//! The `revsyn` command line: synthesis, verification, costing, expansion,
//! bounds and batch benchmarking.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use revsyn_core::reduction::total_bound;
use revsyn_core::{
    bounds, embed_truth_table, estimate_runtime_class, expand_mct_with, quantum_cost, read_permutation, read_real,
    read_truth_table, synthesize, toffoli_count, verify_identity, write_real, write_report, CostTable, ExpansionPolicy,
    GateSequence, MixConfig, Permutation, RuntimeClass, SynthesisConfig,
};

/// Environment variable naming a cost table used when `--cost-table` is absent.
pub const COST_TABLE_ENV: &str = "REVSYN_COST_TABLE";

#[derive(Debug, Parser)]
#[command(name = "revsyn", version, about = "Reversible circuit synthesis for n-bit permutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a permutation or truth table into a garbageless .real circuit.
    Synth(SynthArgs),
    /// Check that a circuit computes a permutation.
    Verify(VerifyArgs),
    /// Report gate count, Toffoli count and quantum cost of a circuit.
    Cost(CostArgs),
    /// Rewrite multiple-controlled gates into NOT, CNOT and Toffoli gates.
    Expand(ExpandArgs),
    /// Print the Toffoli bounds for width n.
    Bound(BoundArgs),
    /// Synthesize every .perm and .tt file in a directory and tabulate the results.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Decide from the file extension: .tt is a truth table, anything else a permutation.
    Auto,
    Perm,
    Tt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Clean,
    Dirty,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Lookahead depth for every position without a --depths override.
    #[arg(long, default_value_t = 1)]
    depth: u32,
    /// Per-level depth overrides as j=d pairs, e.g. 7=2,6=1.
    #[arg(long, value_delimiter = ',', value_parser = parse_depth_pair)]
    depths: Vec<(u32, u32)>,
    /// Number of final positions searched exhaustively.
    #[arg(long, default_value_t = 9)]
    tail: usize,
    /// Seed echoed in reports.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cost table file; defaults to $REVSYN_COST_TABLE, then the built-in table.
    #[arg(long)]
    cost_table: Option<PathBuf>,
    /// Largest CX composite depth tried when mixing.
    #[arg(long, default_value_t = 4)]
    mix_depth: u32,
    /// Cap on composites evaluated when mixing.
    #[arg(long, default_value_t = 2_000_000)]
    mix_budget: u64,
    /// Fail instead of patching an inexact mix with transposition gates.
    #[arg(long)]
    no_fixups: bool,
    /// Keep adjacent identical gates.
    #[arg(long)]
    no_peephole: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Permutation (.perm) or truth table (.tt).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    format: InputFormat,
    /// Output .real file; the circuit goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a key/value synthesis report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    perm: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    format: InputFormat,
    #[arg(long)]
    circuit: PathBuf,
}

#[derive(Debug, Args)]
struct CostArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    cost_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExpandArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Output .real file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// clean: m-2 zeroed work lines; dirty: one work line in any state.
    #[arg(long, value_enum, default_value_t = Policy::Clean)]
    policy: Policy,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    n: u32,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Omit the wall-time column so tables compare byte for byte.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    search: SearchArgs,
}

fn parse_depth_pair(s: &str) -> Result<(u32, u32), String> {
    let (j, d) = s.split_once('=').ok_or_else(|| format!("expected j=d, got `{s}`"))?;
    let j = j.trim().parse().map_err(|e| format!("bad level `{j}`: {e}"))?;
    let d = d.trim().parse().map_err(|e| format!("bad depth `{d}`: {e}"))?;
    Ok((j, d))
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    VerificationFailed,
}

/// Runs the command line and returns the process exit status: 0 on success,
/// 1 when a verification fails, 2 on input errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Verify(a) => verify(&a),
        Command::Cost(a) => cost(&a),
        Command::Expand(a) => expand(&a),
        Command::Bound(a) => bound(&a),
        Command::Bench(a) => bench(&a),
    };
    match result {
        Ok(Status::Ok) => 0,
        Ok(Status::VerificationFailed) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Loads a function as a permutation together with its garbage line count.
fn load_function(path: &Path, format: InputFormat) -> Result<(Permutation, u32)> {
    let text = read(path)?;
    let is_tt = match format {
        InputFormat::Tt => true,
        InputFormat::Perm => false,
        InputFormat::Auto => path.extension().is_some_and(|e| e == "tt"),
    };
    let parsed = if is_tt {
        read_truth_table(&text).and_then(|tt| embed_truth_table(&tt))
    } else {
        read_permutation(&text).map(|p| (p, 0))
    };
    parsed.with_context(|| format!("cannot parse {}", path.display()))
}

fn load_circuit(path: &Path) -> Result<GateSequence> {
    read_real(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

fn load_cost_table(path: Option<&Path>) -> Result<CostTable> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(COST_TABLE_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => return Ok(CostTable::default_table()),
        },
    };
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    CostTable::parse(&name, &read(&path)?).with_context(|| format!("cannot parse cost table {}", path.display()))
}

fn config(a: &SearchArgs) -> Result<SynthesisConfig> {
    if a.mix_depth == 0 || a.mix_depth > 4 {
        bail!("--mix-depth must be between 1 and 4");
    }
    Ok(SynthesisConfig {
        depths: a.depths.iter().copied().collect::<BTreeMap<_, _>>(),
        default_depth: a.depth,
        exhaustive_tail: a.tail,
        mix: MixConfig {
            max_depth: a.mix_depth,
            enumeration_budget: a.mix_budget,
            allow_fallback_fixups: !a.no_fixups,
        },
        seed: a.seed,
        post_peephole: !a.no_peephole,
        cost_table: load_cost_table(a.cost_table.as_deref())?,
    })
}

fn warn_if_expensive(n: u32, cfg: &SynthesisConfig) {
    if n < 3 {
        return;
    }
    let d = cfg.depths.values().copied().chain([cfg.default_depth]).max().unwrap_or(0);
    let e = estimate_runtime_class(n, d);
    match e.class {
        RuntimeClass::SubMinute => {}
        RuntimeClass::Minutes => {
            eprintln!("note: width {n} at depth {d} is {}; expect up to {:.0} s", e.complexity, e.predicted_seconds)
        }
        RuntimeClass::Warning => eprintln!(
            "warning: width {n} at depth {d} is {}; worst-case estimate {:.1e} s",
            e.complexity, e.predicted_seconds
        ),
    }
}

fn synth(a: &SynthArgs) -> Result<Status> {
    let (perm, garbage) = load_function(&a.input, a.format)?;
    let cfg = config(&a.search)?;
    warn_if_expensive(perm.width(), &cfg);
    let (circuit, report) = synthesize(&perm, &cfg).map_err(|e| anyhow!("synthesis failed: {e}"))?;
    write_or_print(a.out.as_deref(), &write_real(&circuit))?;
    if let Some(p) = &a.report {
        fs::write(p, write_report(&report)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    eprintln!(
        "width {} garbage {garbage} gates {} toffoli {} qc {} bound {} time {:.3}s",
        report.width,
        report.gate_count,
        report.toffoli_total,
        report.quantum_cost_total,
        report.bound_total,
        report.wall_time.as_secs_f64()
    );
    Ok(Status::Ok)
}

fn verify(a: &VerifyArgs) -> Result<Status> {
    let (perm, _) = load_function(&a.perm, a.format)?;
    let circuit = load_circuit(&a.circuit)?;
    if circuit.width() != perm.width() {
        println!("FAIL: circuit has {} lines, permutation has {}", circuit.width(), perm.width());
        return Ok(Status::VerificationFailed);
    }
    if verify_identity(&perm, &circuit)? {
        println!("PASS");
        Ok(Status::Ok)
    } else {
        println!("FAIL: circuit does not compute the permutation");
        Ok(Status::VerificationFailed)
    }
}

fn cost(a: &CostArgs) -> Result<Status> {
    let circuit = load_circuit(&a.circuit)?;
    let table = load_cost_table(a.cost_table.as_deref())?;
    println!("lines {}", circuit.width());
    println!("gates {}", circuit.len());
    println!("toffoli {}", toffoli_count(&circuit));
    println!("qc {}", quantum_cost(&circuit, &table)?);
    println!("cost_table {}", table.name());
    Ok(Status::Ok)
}

fn expand(a: &ExpandArgs) -> Result<Status> {
    let circuit = load_circuit(&a.circuit)?;
    let policy = match a.policy {
        Policy::Clean => ExpansionPolicy::CleanLadder,
        Policy::Dirty => ExpansionPolicy::DirtyAncilla,
    };
    let e = expand_mct_with(&circuit, policy)?;
    write_or_print(a.out.as_deref(), &write_real(&e.circuit))?;
    eprintln!("work lines {} gates {} toffoli {}", e.work_lines, e.circuit.len(), toffoli_count(&e.circuit));
    Ok(Status::Ok)
}

fn bound(a: &BoundArgs) -> Result<Status> {
    let b = bounds(a.n)?;
    println!("n_c = {}", b.n_c);
    println!("n_a = {}", b.n_a);
    println!("extra = {}", b.extra);
    println!("per_reduction_total = {}", b.per_reduction_total);
    println!("total = {}", total_bound(a.n));
    Ok(Status::Ok)
}

struct BenchRow {
    name: String,
    n_in: u32,
    n_out: u32,
    garbage: u32,
    qc: u64,
    toffoli: u64,
    seconds: f64,
    verified: bool,
}

fn bench_one(path: &Path, cfg: &SynthesisConfig) -> Result<BenchRow> {
    let (perm, garbage) = load_function(path, InputFormat::Auto)?;
    let start = Instant::now();
    let (circuit, report) = synthesize(&perm, cfg).map_err(|e| anyhow!("synthesis failed: {e}"))?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchRow {
        name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        n_in: perm.width(),
        n_out: perm.width() - garbage,
        garbage,
        qc: report.quantum_cost_total,
        toffoli: report.toffoli_total,
        seconds,
        verified: verify_identity(&perm, &circuit)?,
    })
}

fn bench(a: &BenchArgs) -> Result<Status> {
    let cfg = config(&a.search)?;
    let mut files: Vec<PathBuf> = fs::read_dir(&a.dir)
        .with_context(|| format!("cannot list {}", a.dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "perm" || e == "tt"))
        .collect();
    files.sort();
    let rows: Vec<Result<BenchRow>> = files.par_iter().map(|p| bench_one(p, &cfg)).collect();

    let mut table = String::from("function\tin\tout\tgarbage\tQC\t#TOF");
    if !a.no_timing {
        table.push_str("\ttime_s");
    }
    table.push('\n');
    let (mut errors, mut failures) = (0, 0);
    for (path, row) in files.iter().zip(rows) {
        match row {
            Ok(r) => {
                if !r.verified {
                    failures += 1;
                    eprintln!("{}: circuit does not verify", path.display());
                }
                let _ = write!(table, "{}\t{}\t{}\t{}\t{}\t{}", r.name, r.n_in, r.n_out, r.garbage, r.qc, r.toffoli);
                if !a.no_timing {
                    let _ = write!(table, "\t{:.3}", r.seconds);
                }
                table.push('\n');
            }
            Err(e) => {
                errors += 1;
                eprintln!("{}: {e:#}", path.display());
            }
        }
    }
    print!("{table}");
    if failures > 0 {
        Ok(Status::VerificationFailed)
    } else if errors > 0 {
        bail!("{errors} input file(s) could not be processed")
    } else {
        Ok(Status::Ok)
    }
}
