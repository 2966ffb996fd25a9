//! Reversible circuit synthesis for arbitrary `n`-bit permutations.
//!
//! The synthesizer repeatedly rewrites a permutation `P` on `n` lines into
//! `Q ⊗ I_2`, making the last line an identity wire, until two lines remain.
//! Every gate it spends along the way is a multiple-controlled Toffoli gate;
//! collected in order they form a garbage-free circuit computing `P`.
//!
//! ```
//! use revsyn_core::{synthesize, verify_identity, Permutation, SynthesisConfig};
//!
//! let p = Permutation::new(3, vec![7, 2, 0, 1, 5, 3, 6, 4]).unwrap();
//! let (circuit, report) = synthesize(&p, &SynthesisConfig::default()).unwrap();
//! assert!(verify_identity(&p, &circuit).unwrap());
//! assert_eq!(circuit.execute(0), 7);
//! println!("{} Toffoli gates", report.toffoli_total);
//! ```

pub mod blocks;
pub mod conditioning;
pub mod cost;
pub mod formats;
pub mod perm;
pub mod reduction;
pub mod synthesis;

pub use blocks::{
    classify_positions, count_free_blocks, find_blocks, findm, BlockFilter, BlockKind, BlockList, PairClass,
    PositionCounts,
};
pub use conditioning::{mix, pre_pick, preprocess, ConditioningError, FlipOutcome, MixConfig, PseudoPair};
pub use cost::{
    expand_mct, expand_mct_with, quantum_cost, toffoli_count, CostError, CostTable, ExpansionPolicy, ExpansionResult,
};
pub use formats::{
    embed_truth_table, parse_report, read_permutation, read_real, read_truth_table, write_permutation, write_real,
    write_report, write_truth_table, FormatError, TruthTable,
};
pub use perm::{
    apply_gate, apply_sequence, parity, reduce_width, sample, verify_identity, Control, Gate, GateSequence, Parity,
    PermError, Permutation, Polarity, SampleKind, MAX_WIDTH,
};
pub use reduction::{
    alloc, bounds, cons, n_pick, pick, reduce_general, reduce_normal, BoundSet, ReductionError, RelevantPair,
};
pub use synthesis::{
    estimate_runtime_class, search_two_bit, select_with_lookahead, synthesize, RuntimeClass, RuntimeEstimate,
    SynthesisConfig, SynthesisError, SynthesisReport,
};
