#![allow(dead_code)]

pub mod oracles;

use oracles::Reg;
use rand::Rng;
use simlearn_core::linalg::{symmetrize, Matrix, SymMatrix};
use simlearn_core::NormKind;

pub fn reg_of(kind: NormKind) -> Reg {
    match kind {
        NormKind::L1 => Reg::L1,
        NormKind::Frobenius => Reg::Fro,
        NormKind::Mixed21 => Reg::Mixed21,
        NormKind::Trace => Reg::Trace,
    }
}

pub fn random_matrix(rng: &mut impl Rng, n: usize, spread: f64) -> Matrix {
    let data = (0..n * n).map(|_| rng.random_range(-spread..spread)).collect();
    Matrix::from_row_major(n, data).unwrap()
}

pub fn random_sym(rng: &mut impl Rng, n: usize, spread: f64) -> SymMatrix {
    symmetrize(&random_matrix(rng, n, spread))
}

pub fn random_vec(rng: &mut impl Rng, n: usize, spread: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-spread..spread)).collect()
}

pub fn random_labels(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}
