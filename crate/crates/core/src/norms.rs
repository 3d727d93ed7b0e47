//! The four matrix regularizers, their dual norms, and proximal maps.
//!
//! | kind      | norm                         | dual norm                      |
//! |-----------|------------------------------|--------------------------------|
//! | `L1`      | `Σ |a_kl|`                   | `max |b_kl|`                   |
//! | `Frobenius` | `(Σ a_kl²)^½`              | itself                         |
//! | `Mixed21` | `Σ_k ‖row_k‖₂`               | `max_k ‖row_k‖₂`  ((2,∞) norm) |
//! | `Trace`   | `Σ σ_l`                      | `σ_max` (spectral norm)        |
//!
//! For a rank-one matrix `v xᵀ` every dual norm factorizes into a product of
//! two vector norms, which is what makes `X*` and the Rademacher average cheap
//! to evaluate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_len, dot, norm2, norm_inf, sym_eigendecomposition, symmetrize, Matrix, SymMatrix, JACOBI_MAX_SWEEPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "fro")]
    Frobenius,
    #[serde(rename = "mixed21")]
    Mixed21,
    #[serde(rename = "trace")]
    Trace,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [
        NormKind::L1,
        NormKind::Frobenius,
        NormKind::Mixed21,
        NormKind::Trace,
    ];

    /// Stable index, used when deriving per-cell seeds.
    pub fn index(self) -> u64 {
        match self {
            NormKind::L1 => 0,
            NormKind::Frobenius => 1,
            NormKind::Mixed21 => 2,
            NormKind::Trace => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::Frobenius => "fro",
            NormKind::Mixed21 => "mixed21",
            NormKind::Trace => "trace",
        }
    }

    /// Vector norm applied to the left factor `v` of `‖v xᵀ‖_*`.
    pub fn rank1_left(self, v: &[f64]) -> f64 {
        match self {
            NormKind::L1 | NormKind::Mixed21 => norm_inf(v),
            NormKind::Frobenius | NormKind::Trace => norm2(v),
        }
    }

    /// Vector norm applied to the right factor `x` of `‖v xᵀ‖_*`.
    pub fn rank1_right(self, x: &[f64]) -> f64 {
        match self {
            NormKind::L1 => norm_inf(x),
            NormKind::Frobenius | NormKind::Mixed21 | NormKind::Trace => norm2(x),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(NormKind::L1),
            "fro" | "frobenius" => Ok(NormKind::Frobenius),
            "mixed21" => Ok(NormKind::Mixed21),
            "trace" => Ok(NormKind::Trace),
            other => Err(Error::param(
                "norm",
                format!("unknown norm `{other}` (expected l1, fro, mixed21 or trace)"),
            )),
        }
    }
}

/// Regularizer value of a symmetric matrix.
///
/// The trace norm uses the eigenvalues: for symmetric `A` the singular values
/// are `|λ_l|`. Returns NaN if the eigen-solver fails, which only happens for
/// non-finite input.
pub fn norm(a: &SymMatrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Trace => match sym_eigendecomposition(a) {
            Ok(e) => e.values.iter().map(|v| v.abs()).sum(),
            Err(_) => f64::NAN,
        },
        _ => norm_general(a.matrix(), kind),
    }
}

/// Regularizer value of an arbitrary square matrix.
///
/// Trace norm here goes through the eigenvalues of `BᵀB`, so it is less
/// accurate for nearly singular input than [`norm`] on symmetric matrices.
pub fn norm_general(b: &Matrix, kind: NormKind) -> f64 {
    let n = b.dim();
    match kind {
        NormKind::L1 => b.as_slice().iter().map(|v| v.abs()).sum(),
        NormKind::Frobenius => b.frobenius(),
        NormKind::Mixed21 => (0..n).map(|k| norm2(b.row(k))).sum(),
        NormKind::Trace => singular_values(b)
            .map(|s| s.iter().sum())
            .unwrap_or(f64::NAN),
    }
}

/// Dual norm `sup { ⟨A, B⟩ : ‖A‖ ≤ 1 }` of an arbitrary square matrix.
pub fn dual_norm(b: &Matrix, kind: NormKind) -> f64 {
    let n = b.dim();
    match kind {
        NormKind::L1 => norm_inf(b.as_slice()),
        NormKind::Frobenius => b.frobenius(),
        NormKind::Mixed21 => (0..n).map(|k| norm2(b.row(k))).fold(0.0, f64::max),
        NormKind::Trace => singular_values(b)
            .map(|s| s.iter().copied().fold(0.0, f64::max))
            .unwrap_or(f64::NAN),
    }
}

/// `dual_norm(v xᵀ)` via its closed-form factorization.
pub fn dual_norm_rank1(v: &[f64], x: &[f64], kind: NormKind) -> Result<f64> {
    check_len(v.len(), x.len())?;
    Ok(kind.rank1_left(v) * kind.rank1_right(x))
}

/// Singular values of a square matrix by one-sided Jacobi: columns are
/// rotated until mutually orthogonal, and their norms are then the singular
/// values. Unlike `sqrt(eig(BᵀB))` this keeps small singular values accurate.
fn singular_values(b: &Matrix) -> Result<Vec<f64>> {
    if !b.is_finite() {
        return Err(Error::NoConvergence { sweeps: 0 });
    }
    let n = b.dim();
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| b[(i, j)]).collect()).collect();
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (up, uq) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * up - s * uq;
                    cols[q][i] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Proximal map `argmin_A ½‖A − B‖_F² + τ‖A‖` over symmetric matrices.
///
/// L1, Frobenius and trace have exact closed forms that preserve symmetry.
/// The (2,1) norm has none on the symmetric subspace, so it is solved
/// iteratively by [`prox_mixed21_symmetric`].
pub fn prox(b: &SymMatrix, tau: f64, kind: NormKind) -> Result<SymMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::param("tau", format!("must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(b.clone());
    }
    let n = b.dim();
    let m = b.matrix();
    let out = match kind {
        NormKind::L1 => {
            let data = m.as_slice().iter().map(|&v| soft_threshold(v, tau)).collect();
            // Elementwise and sign-symmetric, so symmetry is preserved exactly.
            SymMatrix::new(Matrix::from_row_major(n, data)?)?
        }
        NormKind::Frobenius => {
            let f = m.frobenius();
            let c = if f <= tau { 0.0 } else { 1.0 - tau / f };
            b.scale(c)
        }
        NormKind::Mixed21 => prox_mixed21_symmetric(b, tau),
        NormKind::Trace => {
            let e = sym_eigendecomposition(b)?;
            e.reassemble(|v| soft_threshold(v, tau))
        }
    };
    Ok(out)
}

/// Row-wise group shrinkage followed by symmetrization. Cheap, but not the
/// proximal point on the symmetric subspace: row `k` and column `k` shrink
/// by different factors, and averaging them can miss the minimizer of the
/// prox objective by a wide margin.
pub fn prox_mixed21_row_symmetrized(b: &SymMatrix, tau: f64) -> SymMatrix {
    let n = b.dim();
    let m = b.matrix();
    let mut shrunk = Matrix::zeros(n);
    for k in 0..n {
        let r = norm2(m.row(k));
        let c = if r <= tau { 0.0 } else { 1.0 - tau / r };
        for l in 0..n {
            shrunk[(k, l)] = c * m[(k, l)];
        }
    }
    symmetrize(&shrunk)
}

pub const MIXED21_PROX_MAX_ITERS: usize = 20_000;
pub const MIXED21_PROX_GAP: f64 = 1e-13;

/// Exact (2,1) prox over symmetric matrices by accelerated projected
/// gradient on the dual.
///
/// With `S(Z) = (Z + Zᵀ)/2` and `Z` ranging over matrices whose rows lie in
/// the unit ball, the minimizer is `A = B − τ S(Z*)` where `Z*` minimizes
/// `½‖B − τ S(Z)‖²`. Iteration stops once the duality gap, which bounds
/// `½‖A − A*‖²`, falls below `MIXED21_PROX_GAP · max(1, ‖B‖²)`.
pub fn prox_mixed21_symmetric(b: &SymMatrix, tau: f64) -> SymMatrix {
    let n = b.dim();
    let bm = b.matrix().as_slice();
    let project_rows = |z: &mut [f64]| {
        for row in z.chunks_mut(n) {
            let r = norm2(row);
            if r > 1.0 {
                row.iter_mut().for_each(|v| *v /= r);
            }
        }
    };
    let primal_of = |z: &[f64]| -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                a[k * n + l] = bm[k * n + l] - 0.5 * tau * (z[k * n + l] + z[l * n + k]);
            }
        }
        a
    };
    let gap_of = |a: &[f64]| -> f64 {
        // P(A) − D(Z) with A = B − τS(Z):
        // ½‖A−B‖² + τ‖A‖₂₁ − (τ⟨S,B⟩ − ½τ²‖S‖²) = τ‖A‖₂₁ − τ⟨S,A⟩
        //   = τ‖A‖₂₁ − ⟨B − A, A⟩
        let mixed: f64 = a.chunks(n).map(norm2).sum();
        let inner: f64 = a.iter().zip(bm).map(|(x, y)| (y - x) * x).sum();
        tau * mixed - inner
    };
    let scale = bm.iter().map(|v| v * v).sum::<f64>().max(1.0);

    let mut z: Vec<f64> = bm.iter().map(|v| v / tau).collect();
    project_rows(&mut z);
    let mut z_prev = z.clone();
    let mut y = z.clone();
    let mut t = 1.0f64;
    let mut best = primal_of(&z);
    let mut best_gap = gap_of(&best);
    for _ in 0..MIXED21_PROX_MAX_ITERS {
        if best_gap <= MIXED21_PROX_GAP * scale {
            break;
        }
        // gradient step of length 1/τ² on ½‖B − τS(Y)‖²
        let a_y = primal_of(&y);
        let mut next: Vec<f64> = y.iter().zip(&a_y).map(|(yv, av)| yv + av / tau).collect();
        project_rows(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        for k in 0..n * n {
            y[k] = next[k] + momentum * (next[k] - z_prev[k]);
        }
        z_prev.clone_from(&next);
        z = next;
        t = t_next;
        let a = primal_of(&z);
        let gap = gap_of(&a);
        if gap < best_gap {
            best_gap = gap;
            best = a;
        }
    }
    let out = Matrix::from_row_major(n, best).expect("square by construction");
    symmetrize(&out)
}

pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}
