//! Dense square matrices and the symmetric-matrix utilities the norms need.
//!
//! Everything here works on small `d × d` matrices stored row-major, which is
//! all the similarity model ever touches.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal entries at most this fraction of the Frobenius norm are
/// annihilated without a rotation; a sweep with no rotations ends the
/// Jacobi iteration.
pub const JACOBI_TOLERANCE: f64 = f64::EPSILON;
/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// A dense `n × n` real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a
    /// perfect square.
    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Matrix { dim, data: entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    row,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { dim, data })
    }

    /// The outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Result<Self> {
        check_len(u.len(), v.len())?;
        let dim = u.len();
        let mut data = Vec::with_capacity(dim * dim);
        for &a in u {
            data.extend(v.iter().map(|&b| a * b));
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut t = Matrix::zeros(n);
        for k in 0..n {
            for l in 0..n {
                t[(l, k)] = self[(k, l)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_len(self.dim, other.dim)?;
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        Ok((0..self.dim).map(|k| dot(self.row(k), x)).collect())
    }

    /// Frobenius inner product `trace(selfᵀ other)`.
    pub fn inner(&self, other: &Matrix) -> Result<f64> {
        check_len(self.dim, other.dim)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn frobenius(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, c: f64, other: &Matrix) -> Result<Matrix> {
        check_len(self.dim, other.dim)?;
        Ok(Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (k, l): (usize, usize)) -> &f64 {
        &self.data[k * self.dim + l]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (k, l): (usize, usize)) -> &mut f64 {
        &mut self.data[k * self.dim + l]
    }
}

/// A matrix whose entries satisfy `a[k][l] == a[l][k]` exactly.
///
/// The only ways to obtain one are validated construction and
/// [`symmetrize`], so every value of this type is bitwise symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix(Matrix);

#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = Error;
    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        SymMatrix::new(Matrix::from_row_major(r.dim, r.entries)?)
    }
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(s: SymMatrix) -> Self {
        SymMatrixRepr {
            dim: s.dim(),
            entries: s.0.data,
        }
    }
}

impl SymMatrix {
    /// Validates exact symmetry.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        for k in 0..m.dim {
            for l in (k + 1)..m.dim {
                if m[(k, l)] != m[(l, k)] {
                    return Err(Error::NotSymmetric { row: k, col: l });
                }
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(Matrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(Matrix::identity(dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (k, &v) in diag.iter().enumerate() {
            m[(k, k)] = v;
        }
        SymMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `c · self`, which stays exactly symmetric.
    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix(self.0.scale(c))
    }

    /// The bilinear form `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        let ay = self.0.mul_vec(y)?;
        Ok(dot(x, &ay))
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// `(B + Bᵀ) / 2`, computed so the result is bitwise symmetric.
pub fn symmetrize(b: &Matrix) -> SymMatrix {
    let n = b.dim;
    let mut out = Matrix::zeros(n);
    for k in 0..n {
        out[(k, k)] = b[(k, k)];
        for l in (k + 1)..n {
            let v = 0.5 * (b[(k, l)] + b[(l, k)]);
            out[(k, l)] = v;
            out[(l, k)] = v;
        }
    }
    SymMatrix(out)
}

/// Symmetrizes a matrix given as rows, rejecting ragged input.
pub fn symmetrize_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
    Ok(symmetrize(&Matrix::from_rows(rows)?))
}

/// Eigen-decomposition `A = Q diag(λ) Qᵀ` of a symmetric matrix.
///
/// Eigenvalues are sorted in decreasing order; column `k` of `vectors` is the
/// eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// Rebuilds `Q diag(f(λ)) Qᵀ` for a spectral map `f`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let q = &self.vectors;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (k, &lam) in mapped.iter().enumerate() {
                    acc += q[(i, k)] * lam * q[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        SymMatrix(out)
    }
}

/// Cyclic Jacobi eigenvalue algorithm.
pub fn sym_eigendecomposition(a: &SymMatrix) -> Result<SymEigen> {
    let n = a.dim();
    let mut w = a.matrix().clone();
    let mut v = Matrix::identity(n);
    if !w.is_finite() {
        return Err(Error::NoConvergence { sweeps: 0 });
    }
    let scale = w.frobenius();

    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        let mut rotations = 0;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq.abs() <= JACOBI_TOLERANCE * scale {
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut w, &mut v, p, q, c, s, t, apq);
                rotations += 1;
            }
        }
        if rotations == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

#[allow(clippy::too_many_arguments)]
fn rotate(w: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = w.dim;
    w[(p, p)] -= t * apq;
    w[(q, q)] += t * apq;
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;
    for r in 0..n {
        if r != p && r != q {
            let wrp = w[(r, p)];
            let wrq = w[(r, q)];
            let np = c * wrp - s * wrq;
            let nq = s * wrp + c * wrq;
            w[(r, p)] = np;
            w[(p, r)] = np;
            w[(r, q)] = nq;
            w[(q, r)] = nq;
        }
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
