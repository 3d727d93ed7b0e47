//! Generalization-bound ingredients and certificates.
//!
//! `X*` is the largest dual norm of a rank-one `x' xᵀ` over the sample, and
//! `R_m = E sup_x̃ ‖(1/m) Σ σ_i y_i x_i x̃ᵀ‖_*` is the Rademacher average
//! of the sign-randomized sample matrix. Both reduce to vector norms through
//! the rank-one factorization `‖v xᵀ‖_* = ‖v‖_a ‖x‖_b`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::norms::NormKind;
use crate::rng::stream_rng;
use crate::similarity::{check_margin, empirical_similarity_error, SimilarityModel};

pub const DEFAULT_DELTA: f64 = 0.05;
pub const KHINCHIN_EXACT_MAX_N: usize = 20;

/// Largest left and right rank-one factor norms over the sample.
fn factor_maxima(data: &Dataset, kind: NormKind) -> (f64, f64) {
    data.rows().fold((0.0f64, 0.0f64), |(l, r), (x, _)| {
        (l.max(kind.rank1_left(x)), r.max(kind.rank1_right(x)))
    })
}

pub fn x_star(data: &Dataset, kind: NormKind) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (l, r) = factor_maxima(data, kind);
    Ok(l * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of `R_m` with the sup over `x̃` restricted to the
/// sample. Draw `k` uses substream `k` of `seed`, and the mean is reduced
/// in draw order, so the result does not depend on the thread schedule.
pub fn rademacher_empirical(data: &Dataset, kind: NormKind, mc_draws: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if mc_draws == 0 {
        return Err(Error::param("mc_draws", "must be at least 1"));
    }
    let m = data.len();
    let d = data.dim();
    let (_, right_max) = factor_maxima(data, kind);
    let labels = data.labels();
    let features = data.features();

    let values: Vec<f64> = (0..mc_draws as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let mut v = vec![0.0; d];
            for i in 0..m {
                let s = if rng.random::<bool>() { labels[i] } else { -labels[i] };
                for (acc, x) in v.iter_mut().zip(&features[i * d..(i + 1) * d]) {
                    *acc += s * x;
                }
            }
            v.iter_mut().for_each(|c| *c /= m as f64);
            kind.rank1_left(&v) * right_max
        })
        .collect();

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloEstimate { estimate: mean, std_error })
}

/// Sample statistics entering the closed-form estimates of `R_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleScales {
    pub max_inf: f64,
    pub max_fro: f64,
    pub sum_sq_fro: f64,
    pub d: usize,
    pub m: f64,
}

impl SampleScales {
    pub fn of(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut s = SampleScales {
            max_inf: 0.0,
            max_fro: 0.0,
            sum_sq_fro: 0.0,
            d: data.dim(),
            m: data.len() as f64,
        };
        for (x, _) in data.rows() {
            let f = crate::linalg::norm2(x);
            s.max_inf = s.max_inf.max(crate::linalg::norm_inf(x));
            s.max_fro = s.max_fro.max(f);
            s.sum_sq_fro += f * f;
        }
        Ok(s)
    }

    pub fn analytic(&self, kind: NormKind) -> f64 {
        let log_term = (std::f64::consts::E * ((self.d + 1) as f64).ln() / self.m).sqrt();
        match kind {
            NormKind::L1 => 2.0 * self.max_inf * self.max_inf * log_term,
            NormKind::Frobenius => 2.0 * self.max_fro * self.max_fro * (1.0 / self.m).sqrt(),
            NormKind::Mixed21 => 2.0 * self.max_fro * self.max_inf * log_term,
            NormKind::Trace => self.max_fro * self.sum_sq_fro.sqrt() / self.m,
        }
    }
}

pub fn rademacher_analytic(data: &Dataset, kind: NormKind) -> Result<f64> {
    Ok(SampleScales::of(data)?.analytic(kind))
}

fn check_bound_inputs(x_star: f64, r_m: f64, margin: f64, lambda: f64, delta: f64, m: usize) -> Result<()> {
    check_margin(margin)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if !(x_star >= 0.0) || !(r_m >= 0.0) {
        return Err(Error::param("x_star/r_m", "must be nonnegative"));
    }
    Ok(())
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")))
    }
}

fn confidence_term(x_star: f64, margin: f64, lambda: f64, delta: f64, m: usize) -> f64 {
    2.0 * x_star / (margin * lambda) * (2.0 * (1.0 / delta).ln() / m as f64).sqrt()
}

/// `6 R_m/(rλ) + (2 X*/(rλ)) √(2 ln(1/δ)/m)`.
pub fn theorem1_bound(x_star: f64, r_m: f64, margin: f64, lambda: f64, delta: f64, m: usize) -> Result<f64> {
    check_bound_inputs(x_star, r_m, margin, lambda, delta, m)?;
    Ok(6.0 * r_m / (margin * lambda) + confidence_term(x_star, margin, lambda, delta, m))
}

/// `E_z(A) + 4 R_m/(λr) + (2 X*/(λr)) √(2 ln(1/δ)/m)`.
pub fn theorem2_bound(
    e_z_of_a: f64,
    x_star: f64,
    r_m: f64,
    margin: f64,
    lambda: f64,
    delta: f64,
    m: usize,
) -> Result<f64> {
    check_bound_inputs(x_star, r_m, margin, lambda, delta, m)?;
    if !(e_z_of_a >= 0.0) {
        return Err(Error::param("e_z_of_A", "must be nonnegative"));
    }
    Ok(e_z_of_a + 4.0 * r_m / (lambda * margin) + confidence_term(x_star, margin, lambda, delta, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KhinchinMode {
    Exact,
    MonteCarlo { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhinchinOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl KhinchinOutcome {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Compares `(E|Σσ_i f_i|^q)^{1/q}` with `√((q−1)/(p−1)) (E|Σσ_i f_i|^p)^{1/p}`.
pub fn khinchin_check(f: &[f64], p: f64, q: f64, mode: KhinchinMode) -> Result<KhinchinOutcome> {
    if !(p > 1.0 && q > p && q.is_finite()) {
        return Err(Error::param("p/q", format!("need 1 < p < q, got p = {p}, q = {q}")));
    }
    if f.is_empty() {
        return Err(Error::param("f", "must be nonempty"));
    }
    let (mp, mq) = match mode {
        KhinchinMode::Exact => {
            if f.len() > KHINCHIN_EXACT_MAX_N {
                return Err(Error::param(
                    "f",
                    format!("exact mode supports n ≤ {KHINCHIN_EXACT_MAX_N}, got {}", f.len()),
                ));
            }
            let count = 1u64 << f.len();
            let (sp, sq) = (0..count).fold((0.0, 0.0), |(sp, sq), mask| {
                let s: f64 = f
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if mask >> i & 1 == 1 { -v } else { *v })
                    .sum();
                (sp + s.abs().powf(p), sq + s.abs().powf(q))
            });
            (sp / count as f64, sq / count as f64)
        }
        KhinchinMode::MonteCarlo { draws, seed } => {
            if draws == 0 {
                return Err(Error::param("draws", "must be at least 1"));
            }
            let mut rng = stream_rng(seed, 0);
            let (mut sp, mut sq) = (0.0, 0.0);
            for _ in 0..draws {
                let s: f64 = f.iter().map(|v| if rng.random::<bool>() { *v } else { -v }).sum();
                sp += s.abs().powf(p);
                sq += s.abs().powf(q);
            }
            (sp / draws as f64, sq / draws as f64)
        }
    };
    let lhs = mq.powf(1.0 / q);
    let rhs = ((q - 1.0) / (p - 1.0)).sqrt() * mp.powf(1.0 / p);
    Ok(KhinchinOutcome {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub norm_kind: NormKind,
    pub x_star: f64,
    pub r_m_empirical: f64,
    pub r_m_std_error: f64,
    pub r_m_analytic: f64,
    /// `min(r_m_empirical, r_m_analytic)`, the value used by both bounds.
    pub r_m: f64,
    pub empirical_error: f64,
    pub delta: f64,
    pub m: usize,
    pub lambda: f64,
    pub margin: f64,
    pub theorem1_bound: f64,
    pub theorem2_bound: f64,
    pub mc_draws: usize,
    pub seed: u64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "norm_kind,x_star,r_m_empirical,r_m_std_error,r_m_analytic,r_m,\
empirical_error,delta,m,lambda,margin,theorem1_bound,theorem2_bound,mc_draws,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.norm_kind,
            self.x_star,
            self.r_m_empirical,
            self.r_m_std_error,
            self.r_m_analytic,
            self.r_m,
            self.empirical_error,
            self.delta,
            self.m,
            self.lambda,
            self.margin,
            self.theorem1_bound,
            self.theorem2_bound,
            self.mc_draws,
            self.seed
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Recomputes both bounds from the recorded fields.
    pub fn recompute(&self) -> Result<(f64, f64)> {
        Ok((
            theorem1_bound(self.x_star, self.r_m, self.margin, self.lambda, self.delta, self.m)?,
            theorem2_bound(
                self.empirical_error,
                self.x_star,
                self.r_m,
                self.margin,
                self.lambda,
                self.delta,
                self.m,
            )?,
        ))
    }
}

pub fn build_bound_report(
    model: &SimilarityModel,
    data: &Dataset,
    delta: f64,
    mc_draws: usize,
    seed: u64,
) -> Result<BoundReport> {
    check_delta(delta)?;
    crate::linalg::check_len(model.dim(), data.dim())?;
    let kind = model.config.norm_kind;
    let (lambda, margin) = (model.config.lambda, model.config.margin);
    let xs = x_star(data, kind)?;
    let mc = rademacher_empirical(data, kind, mc_draws, seed)?;
    let analytic = rademacher_analytic(data, kind)?;
    let r_m = mc.estimate.min(analytic);
    let e_z = empirical_similarity_error(&model.matrix, data, margin)?;
    let m = data.len();
    Ok(BoundReport {
        norm_kind: kind,
        x_star: xs,
        r_m_empirical: mc.estimate,
        r_m_std_error: mc.std_error,
        r_m_analytic: analytic,
        r_m,
        empirical_error: e_z,
        delta,
        m,
        lambda,
        margin,
        theorem1_bound: theorem1_bound(xs, r_m, margin, lambda, delta, m)?,
        theorem2_bound: theorem2_bound(e_z, xs, r_m, margin, lambda, delta, m)?,
        mc_draws,
        seed,
    })
}
