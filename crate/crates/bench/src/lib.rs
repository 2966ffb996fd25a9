//! Fixed inputs shared by the benchmarks.

use revsyn_core::{read_permutation, Permutation, SampleKind};

/// `count` seeded uniform permutations of width `n`.
pub fn uniform_corpus(n: u32, count: u64) -> Vec<Permutation> {
    (0..count).map(|seed| Permutation::sample(n, seed, SampleKind::Uniform)).collect()
}

pub fn skipjack() -> Permutation {
    read_permutation(include_str!("../../core/tests/data/skipjack.perm")).expect("bundled S-box parses")
}

pub fn khazad() -> Permutation {
    read_permutation(include_str!("../../core/tests/data/khazad.perm")).expect("bundled S-box parses")
}
