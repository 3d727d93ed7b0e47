//! L1-constrained linear separator over a learnt similarity.
//!
//! The separator is `f(x) = Σ_j α_j K_A(x_j, x)` over the training points,
//! trained by minimizing the empirical hinge error subject to
//! `Σ_j |α_j| ≤ 1/r`. Training starts from `α⁰_j = y_j / (m r)`, whose hinge
//! error coincides with the similarity error `E_z(A)`, and keeps the best
//! iterate, so the trained separator never does worse than `E_z(A)` on the
//! training sample.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{check_len, dot, norm1};
use crate::similarity::SimilarityModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatorConfig {
    pub max_iters: usize,
    pub step0: f64,
    /// Recorded for provenance; training is deterministic.
    pub seed: u64,
}

impl Default for SeparatorConfig {
    fn default() -> Self {
        SeparatorConfig {
            max_iters: 2000,
            step0: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separator {
    pub alpha: Vec<f64>,
    pub margin: f64,
    /// Row-major `m × d` anchor points `x_j`.
    pub anchor_features: Vec<f64>,
    pub model: SimilarityModel,
}

impl Separator {
    /// Checks shapes and the `Σ|α_j| ≤ 1/r` budget.
    pub fn validate(&self) -> Result<()> {
        let d = self.model.dim();
        check_len(self.alpha.len() * d, self.anchor_features.len())?;
        if self.alpha.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if norm1(&self.alpha) > 1.0 / self.margin + 1e-9 {
            return Err(Error::param(
                "alpha",
                format!("L1 norm {} exceeds 1/margin = {}", norm1(&self.alpha), 1.0 / self.margin),
            ));
        }
        Ok(())
    }

    /// The feasible witness `α⁰_j = y_j / (m r)` on the model's training set.
    pub fn anchor_witness(model: &SimilarityModel, data: &Dataset) -> Result<Separator> {
        check_len(model.dim(), data.dim())?;
        let scale = 1.0 / (data.len() as f64 * model.config.margin);
        Ok(Separator {
            alpha: data.labels().iter().map(|y| y * scale).collect(),
            margin: model.config.margin,
            anchor_features: data.features().to_vec(),
            model: model.clone(),
        })
    }

    pub fn anchor(&self, j: usize) -> &[f64] {
        let d = self.model.dim();
        &self.anchor_features[j * d..(j + 1) * d]
    }

    /// `w = A Σ_j α_j x_j`, so that `f(x) = wᵀx`.
    pub fn weight_vector(&self) -> Vec<f64> {
        let d = self.model.dim();
        let mut combo = vec![0.0; d];
        for (j, &a) in self.alpha.iter().enumerate() {
            for (acc, v) in combo.iter_mut().zip(self.anchor(j)) {
                *acc += a * v;
            }
        }
        self.model
            .matrix
            .matrix()
            .mul_vec(&combo)
            .expect("anchor dimension matches model")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sep: Separator = serde_json::from_str(s)?;
        sep.validate()?;
        Ok(sep)
    }
}

/// `f(x) = Σ_j α_j K_A(x_j, x)`.
pub fn separator_value(sep: &Separator, x: &[f64]) -> Result<f64> {
    check_len(sep.model.dim(), x.len())?;
    Ok(dot(&sep.weight_vector(), x))
}

/// Sign of `f(x)`, with `f(x) = 0` mapped to `+1`.
pub fn classify(sep: &Separator, x: &[f64]) -> Result<i8> {
    Ok(sign_label(separator_value(sep, x)?))
}

pub fn sign_label(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

/// `1/m Σ_i [1 − y_i f(x_i)]_+`.
pub fn empirical_hinge_error(sep: &Separator, data: &Dataset) -> Result<f64> {
    check_len(sep.model.dim(), data.dim())?;
    let w = sep.weight_vector();
    Ok(data.rows().map(|(x, y)| (1.0 - y * dot(&w, x)).max(0.0)).sum::<f64>() / data.len() as f64)
}

/// Plug-in estimate of the true hinge error on held-out samples.
pub fn true_hinge_error(sep: &Separator, holdout: &Dataset) -> Result<f64> {
    empirical_hinge_error(sep, holdout)
}

/// Fraction of samples misclassified by [`classify`].
pub fn zero_one_error(sep: &Separator, data: &Dataset) -> Result<f64> {
    check_len(sep.model.dim(), data.dim())?;
    let w = sep.weight_vector();
    let wrong = data
        .rows()
        .filter(|(x, y)| f64::from(sign_label(dot(&w, x))) != *y)
        .count();
    Ok(wrong as f64 / data.len() as f64)
}

/// Euclidean projection onto `{u : Σ|u_j| ≤ radius}` by sorting magnitudes
/// and locating the soft-threshold level.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    if norm1(v) <= radius {
        return Ok(v.to_vec());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    Ok(v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect())
}

/// Kernel matrix `K_ij = x_iᵀ A x_j` on the training set.
fn kernel_matrix(model: &SimilarityModel, data: &Dataset) -> Vec<f64> {
    let m = data.len();
    let a = model.matrix.matrix();
    let ax: Vec<Vec<f64>> = data
        .rows()
        .map(|(x, _)| a.mul_vec(x).expect("dimension checked"))
        .collect();
    let mut k = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = dot(data.x(i), &ax[j]);
            k[i * m + j] = v;
            k[j * m + i] = v;
        }
    }
    k
}

fn hinge_from_kernel(k: &[f64], labels: &[f64], alpha: &[f64], scores: &mut [f64]) -> f64 {
    let m = labels.len();
    for (i, s) in scores.iter_mut().enumerate() {
        *s = dot(&k[i * m..(i + 1) * m], alpha);
    }
    scores
        .iter()
        .zip(labels)
        .map(|(s, y)| (1.0 - y * s).max(0.0))
        .sum::<f64>()
        / m as f64
}

/// Projected subgradient descent on `α` over the L1 ball of radius `1/r`.
pub fn train_separator(model: &SimilarityModel, data: &Dataset, config: &SeparatorConfig) -> Result<Separator> {
    check_len(model.dim(), data.dim())?;
    if config.max_iters == 0 {
        return Err(Error::param("max_iters", "must be at least 1"));
    }
    if !(config.step0 > 0.0 && config.step0.is_finite()) {
        return Err(Error::param("step0", "must be positive"));
    }
    let m = data.len();
    let radius = 1.0 / model.config.margin;
    let k = kernel_matrix(model, data);
    let labels = data.labels();

    let witness = Separator::anchor_witness(model, data)?;
    let mut alpha = witness.alpha.clone();
    let mut scores = vec![0.0; m];
    let mut best_err = hinge_from_kernel(&k, labels, &alpha, &mut scores);
    let mut best = alpha.clone();
    let mut grad = vec![0.0; m];

    for t in 1..=config.max_iters {
        // scores currently hold K α for the present iterate
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..m {
            if 1.0 - labels[i] * scores[i] > 0.0 {
                let row = &k[i * m..(i + 1) * m];
                for (g, kv) in grad.iter_mut().zip(row) {
                    *g -= labels[i] * kv;
                }
            }
        }
        let eta = config.step0 / (t as f64).sqrt();
        let stepped: Vec<f64> = alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a - eta * g / m as f64)
            .collect();
        alpha = project_l1_ball(&stepped, radius)?;
        let err = hinge_from_kernel(&k, labels, &alpha, &mut scores);
        if !err.is_finite() {
            return Err(Error::NonFinite {
                context: "separator hinge error",
                iteration: t,
            });
        }
        if err < best_err {
            best_err = err;
            best.clone_from(&alpha);
        }
    }

    Ok(Separator {
        alpha: best,
        ..witness
    })
}
