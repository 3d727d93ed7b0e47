//! Fixtures shared by the benchmarks.

use simlearn_core::data::{generate, GeneratorSpec};
use simlearn_core::linalg::{symmetrize, Matrix, SymMatrix};
use simlearn_core::Dataset;

pub fn fixture(m: usize, d: usize, seed: u64) -> Dataset {
    generate(&GeneratorSpec::two_gaussians(d, 2.0, 1.0, seed), m).expect("valid generator")
}

/// Deterministic dense symmetric matrix with entries in (-1, 1).
pub fn test_matrix(d: usize) -> SymMatrix {
    let entries = (0..d * d).map(|k| ((k as f64 + 1.0) * 0.754_877_666).sin()).collect();
    symmetrize(&Matrix::from_row_major(d, entries).expect("square"))
}
