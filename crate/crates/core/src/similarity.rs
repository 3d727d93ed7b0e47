//! Bilinear similarity learning.
//!
//! The empirical error of a symmetric `A` on `z = {(x_i, y_i)}` is
//!
//! ```text
//! E_z(A) = 1/m Σ_i [ 1 − 1/(m r) Σ_j y_i y_j x_iᵀ A x_j ]_+
//! ```
//!
//! with the inner sum over every `j`, including `j = i`. Since
//! `Σ_j y_j x_iᵀ A x_j = x_iᵀ A s` for `s = Σ_j y_j x_j`, everything is
//! evaluated in `O(m d + d²)` rather than `O(m² d²)`.
//!
//! [`train_similarity`] minimizes `E_z(A) + λ‖A‖` by proximal subgradient
//! steps starting from `A = 0`, where the objective equals exactly 1.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{check_len, dot, symmetrize, Matrix, SymMatrix};
use crate::norms::{norm, prox, NormKind};

/// Window over which the best objective must improve before early stopping.
pub const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub lambda: f64,
    pub margin: f64,
    pub norm_kind: NormKind,
    pub max_iters: usize,
    pub step0: f64,
    /// Relative improvement of the best objective required over
    /// [`STALL_WINDOW`] iterations; `0` disables early stopping.
    pub rel_tol: f64,
    /// Recorded for provenance. The full-batch solver draws no random numbers.
    pub seed: u64,
}

impl SimilarityConfig {
    pub fn new(norm_kind: NormKind, lambda: f64, margin: f64) -> Self {
        SimilarityConfig {
            lambda,
            margin,
            norm_kind,
            max_iters: 2000,
            step0: 1.0,
            rel_tol: 1e-8,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        check_margin(self.margin)?;
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::param("step0", format!("must be positive, got {}", self.step0)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::param("rel_tol", "must be nonnegative"));
        }
        Ok(())
    }
}

pub(crate) fn check_margin(margin: f64) -> Result<()> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::param("margin", format!("must be positive, got {margin}")));
    }
    Ok(())
}

/// A learnt similarity matrix `A_z` and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    pub matrix: SymMatrix,
    pub config: SimilarityConfig,
    pub final_objective: f64,
    pub iterations_run: usize,
}

/// Wire format: `{dim, norm_kind, lambda, margin, entries, final_objective,
/// iterations_run}` plus the solver settings.
#[derive(Serialize, Deserialize)]
struct ModelRepr {
    dim: usize,
    norm_kind: NormKind,
    lambda: f64,
    margin: f64,
    entries: Vec<f64>,
    final_objective: f64,
    iterations_run: usize,
    #[serde(default = "default_max_iters")]
    max_iters: usize,
    #[serde(default = "default_step0")]
    step0: f64,
    #[serde(default = "default_rel_tol")]
    rel_tol: f64,
    #[serde(default)]
    seed: u64,
}

fn default_max_iters() -> usize {
    2000
}
fn default_step0() -> f64 {
    1.0
}
fn default_rel_tol() -> f64 {
    1e-8
}

impl Serialize for SimilarityModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr {
            dim: self.matrix.dim(),
            norm_kind: self.config.norm_kind,
            lambda: self.config.lambda,
            margin: self.config.margin,
            entries: self.matrix.matrix().as_slice().to_vec(),
            final_objective: self.final_objective,
            iterations_run: self.iterations_run,
            max_iters: self.config.max_iters,
            step0: self.config.step0,
            rel_tol: self.config.rel_tol,
            seed: self.config.seed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimilarityModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = ModelRepr::deserialize(d)?;
        let matrix = Matrix::from_row_major(r.dim, r.entries)
            .and_then(SymMatrix::new)
            .map_err(D::Error::custom)?;
        let config = SimilarityConfig {
            lambda: r.lambda,
            margin: r.margin,
            norm_kind: r.norm_kind,
            max_iters: r.max_iters,
            step0: r.step0,
            rel_tol: r.rel_tol,
            seed: r.seed,
        };
        config.validate().map_err(D::Error::custom)?;
        Ok(SimilarityModel {
            matrix,
            config,
            final_objective: r.final_objective,
            iterations_run: r.iterations_run,
        })
    }
}

impl SimilarityModel {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.matrix, self.config.norm_kind)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `K_A(x, x') = xᵀ A x'`.
pub fn similarity_score(a: &SymMatrix, x: &[f64], x2: &[f64]) -> Result<f64> {
    check_len(a.dim(), x2.len())?;
    a.bilinear(x, x2)
}

/// Per-sample margins `1/(m r) · y_i x_iᵀ A s` with `s = Σ_j y_j x_j`.
fn margins(a: &SymMatrix, data: &Dataset, margin: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(a.dim(), data.dim())?;
    check_margin(margin)?;
    let s = data.signed_sum();
    let a_s = a.matrix().mul_vec(&s)?;
    let scale = 1.0 / (data.len() as f64 * margin);
    let values = data.rows().map(|(x, y)| scale * y * dot(x, &a_s)).collect();
    Ok((values, s))
}

/// Empirical similarity error `E_z(A)`.
pub fn empirical_similarity_error(a: &SymMatrix, data: &Dataset, margin: f64) -> Result<f64> {
    let (m, _) = margins(a, data, margin)?;
    Ok(m.iter().map(|v| (1.0 - v).max(0.0)).sum::<f64>() / data.len() as f64)
}

/// Plug-in estimate of the true similarity error on held-out samples: the
/// same formula as [`empirical_similarity_error`] with the holdout standing
/// in for the unknown distribution in both integrals.
pub fn true_similarity_error(a: &SymMatrix, holdout: &Dataset, margin: f64) -> Result<f64> {
    empirical_similarity_error(a, holdout, margin)
}

/// `E_z(A) + λ‖A‖`.
pub fn similarity_objective(a: &SymMatrix, data: &Dataset, config: &SimilarityConfig) -> Result<f64> {
    Ok(empirical_similarity_error(a, data, config.margin)? + config.lambda * norm(a, config.norm_kind))
}

/// A subgradient of `E_z` at `A`:
/// `G = −1/(m² r) Σ_{i active} y_i sym(x_i sᵀ)`.
///
/// Index `i` is active when its hinge argument is strictly positive; at the
/// kink the zero element of the subdifferential is used.
pub fn hinge_subgradient(a: &SymMatrix, data: &Dataset, margin: f64) -> Result<SymMatrix> {
    check_len(a.dim(), data.dim())?;
    check_margin(margin)?;
    let pass = HingePass::new(data, margin);
    let (_, u) = pass.eval(a, data);
    Ok(pass.subgradient(&u))
}

/// Cached `s = Σ_j y_j x_j` for repeated evaluations on one dataset.
struct HingePass {
    s: Vec<f64>,
    scale: f64,
    coef: f64,
}

impl HingePass {
    fn new(data: &Dataset, margin: f64) -> Self {
        let n = data.len() as f64;
        HingePass {
            s: data.signed_sum(),
            scale: 1.0 / (n * margin),
            coef: -1.0 / (n * n * margin),
        }
    }

    /// Returns `E_z(A)` and `u = Σ_{active} y_i x_i`.
    fn eval(&self, a: &SymMatrix, data: &Dataset) -> (f64, Vec<f64>) {
        let a_s = a.matrix().mul_vec(&self.s).expect("dimension checked");
        let mut u = vec![0.0; data.dim()];
        let mut err = 0.0;
        for (x, y) in data.rows() {
            let slack = 1.0 - self.scale * y * dot(x, &a_s);
            if slack > 0.0 {
                err += slack;
                for (acc, xv) in u.iter_mut().zip(x) {
                    *acc += y * xv;
                }
            }
        }
        (err / data.len() as f64, u)
    }

    fn subgradient(&self, u: &[f64]) -> SymMatrix {
        let g = Matrix::outer(u, &self.s).expect("dimension checked");
        symmetrize(&g.scale(self.coef))
    }
}

/// Learns `A_z = argmin_A E_z(A) + λ‖A‖` by proximal subgradient descent.
///
/// `A_t = prox(A_{t−1} − η_t G_t, η_t λ)` with `η_t = step0 / √t`, started
/// at zero. The best iterate seen is returned, so the result never has an
/// objective above 1 and therefore `‖A_z‖ ≤ 1/λ`.
pub fn train_similarity(data: &Dataset, config: &SimilarityConfig) -> Result<SimilarityModel> {
    config.validate()?;
    let d = data.dim();
    let pass = HingePass::new(data, config.margin);
    let mut current = SymMatrix::zeros(d);
    let (err0, mut u) = pass.eval(&current, data);
    let mut best = current.clone();
    let mut best_obj = err0;
    // best objective at the end of each iteration, for the stall test
    let mut history = Vec::with_capacity(config.max_iters.min(1 << 16) + 1);
    history.push(best_obj);
    let mut iterations_run = 0;

    for t in 1..=config.max_iters {
        iterations_run = t;
        let eta = config.step0 / (t as f64).sqrt();
        let g = pass.subgradient(&u);
        let stepped = symmetrize(&current.matrix().add_scaled(-eta, g.matrix())?);
        current = prox(&stepped, eta * config.lambda, config.norm_kind)?;
        let (err, next_u) = pass.eval(&current, data);
        u = next_u;
        let obj = err + config.lambda * norm(&current, config.norm_kind);
        if !obj.is_finite() {
            return Err(Error::NonFinite {
                context: "similarity objective",
                iteration: t,
            });
        }
        if obj < best_obj {
            best_obj = obj;
            best = current.clone();
        }
        history.push(best_obj);
        if config.rel_tol > 0.0 && t >= STALL_WINDOW {
            let before = history[t - STALL_WINDOW];
            if before - best_obj < config.rel_tol * before.abs() {
                break;
            }
        }
    }

    Ok(SimilarityModel {
        matrix: best,
        config: config.clone(),
        final_objective: best_obj,
        iterations_run,
    })
}
