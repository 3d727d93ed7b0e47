//! Multi-trial certification runs.
//!
//! Each `(m, d, norm, trial)` run draws a fresh training set and holdout from
//! the configured generator, trains `A_z` and the separator `f_z`, and checks
//! the holdout errors against both bound certificates. Runs are independent,
//! evaluated in parallel, and emitted in `(m, d, norm, trial)` order.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use simlearn_core::bounds::{build_bound_report, check_delta};
use simlearn_core::data::generate_stream;
use simlearn_core::rng::derive_seed;
use simlearn_core::separator::{zero_one_error, Separator};
use simlearn_core::{
    empirical_hinge_error, empirical_similarity_error, train_separator, train_similarity, true_hinge_error,
    true_similarity_error, GeneratorSpec, NormKind, SeparatorConfig, SimilarityConfig,
};

use crate::{write_text, CliError, CliResult};

fn default_holdout() -> usize {
    10_000
}

fn default_iters() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `d` and `seed` are overridden per run.
    pub generator: GeneratorSpec,
    pub m_values: Vec<usize>,
    pub d_values: Vec<usize>,
    pub norm_kinds: Vec<NormKind>,
    pub lambda: f64,
    pub margin: f64,
    pub delta: f64,
    pub trials: usize,
    pub mc_draws: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_holdout")]
    pub holdout_size: usize,
    #[serde(default = "default_iters")]
    pub similarity_iters: usize,
    #[serde(default = "default_iters")]
    pub separator_iters: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let nonempty = |name: &str, empty: bool| {
            if empty {
                Err(CliError::Usage(format!("experiment config: {name} must be nonempty")))
            } else {
                Ok(())
            }
        };
        nonempty("m_values", self.m_values.is_empty())?;
        nonempty("d_values", self.d_values.is_empty())?;
        nonempty("norm_kinds", self.norm_kinds.is_empty())?;
        if self.m_values.contains(&0) || self.d_values.contains(&0) {
            return Err(CliError::Usage("experiment config: m and d values must be positive".into()));
        }
        for (name, v) in [
            ("trials", self.trials),
            ("mc_draws", self.mc_draws),
            ("holdout_size", self.holdout_size),
            ("similarity_iters", self.similarity_iters),
            ("separator_iters", self.separator_iters),
        ] {
            if v == 0 {
                return Err(CliError::Usage(format!("experiment config: {name} must be at least 1")));
            }
        }
        check_delta(self.delta)?;
        SimilarityConfig::new(NormKind::L1, self.lambda, self.margin).validate()?;
        Ok(())
    }

    /// Seed of one run: the master seed mixed with `(m, d, norm, trial)`.
    pub fn run_seed(&self, m: usize, d: usize, norm: NormKind, trial: usize) -> u64 {
        derive_seed(self.seed, &[m as u64, d as u64, norm.index(), trial as u64])
    }
}

pub const EXPERIMENT_COLUMNS: [&str; 27] = [
    "m",
    "d",
    "norm",
    "trial",
    "seed",
    "lambda",
    "margin",
    "delta",
    "iterations_run",
    "a_norm",
    "final_objective",
    "train_similarity_error",
    "holdout_similarity_error",
    "similarity_gap",
    "witness_hinge_error",
    "train_hinge_error",
    "holdout_hinge_error",
    "holdout_zero_one_error",
    "x_star",
    "r_m_empirical",
    "r_m_std_error",
    "r_m_analytic",
    "r_m",
    "theorem1_bound",
    "theorem2_bound",
    "theorem1_violated",
    "theorem2_violated",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub m: usize,
    pub d: usize,
    pub norm: NormKind,
    pub trial: usize,
    pub seed: u64,
    pub lambda: f64,
    pub margin: f64,
    pub delta: f64,
    pub iterations_run: usize,
    pub a_norm: f64,
    pub final_objective: f64,
    pub train_similarity_error: f64,
    pub holdout_similarity_error: f64,
    pub similarity_gap: f64,
    pub witness_hinge_error: f64,
    pub train_hinge_error: f64,
    pub holdout_hinge_error: f64,
    pub holdout_zero_one_error: f64,
    pub x_star: f64,
    pub r_m_empirical: f64,
    pub r_m_std_error: f64,
    pub r_m_analytic: f64,
    pub r_m: f64,
    pub theorem1_bound: f64,
    pub theorem2_bound: f64,
    pub theorem1_violated: bool,
    pub theorem2_violated: bool,
}

impl ExperimentRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.d,
            self.norm,
            self.trial,
            self.seed,
            self.lambda,
            self.margin,
            self.delta,
            self.iterations_run,
            self.a_norm,
            self.final_objective,
            self.train_similarity_error,
            self.holdout_similarity_error,
            self.similarity_gap,
            self.witness_hinge_error,
            self.train_hinge_error,
            self.holdout_hinge_error,
            self.holdout_zero_one_error,
            self.x_star,
            self.r_m_empirical,
            self.r_m_std_error,
            self.r_m_analytic,
            self.r_m,
            self.theorem1_bound,
            self.theorem2_bound,
            u8::from(self.theorem1_violated),
            u8::from(self.theorem2_violated)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub m: usize,
    pub d: usize,
    pub norm: NormKind,
    pub trials: usize,
    pub theorem1_violation_frequency: f64,
    pub theorem2_violation_frequency: f64,
    pub mean_similarity_gap: f64,
    pub mean_holdout_hinge_error: f64,
    pub mean_r_m_empirical: f64,
    pub mean_theorem1_bound: f64,
    pub mean_theorem2_bound: f64,
}

/// Least-squares slope of `ln(mean r_m_empirical)` against `ln m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub d: usize,
    pub norm: NormKind,
    pub points: usize,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub runs: usize,
    pub cells: Vec<CellSummary>,
    pub r_m_scaling: Vec<ScalingFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub summary: ExperimentSummary,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        let mut out = EXPERIMENT_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

fn run_one(config: &ExperimentConfig, m: usize, d: usize, norm: NormKind, trial: usize) -> CliResult<ExperimentRow> {
    let seed = config.run_seed(m, d, norm, trial);
    let spec = GeneratorSpec {
        d,
        seed,
        ..config.generator.clone()
    };
    let train = generate_stream(&spec, m, 0)?;
    let holdout = generate_stream(&spec, config.holdout_size, 1)?;

    let sim_config = SimilarityConfig {
        max_iters: config.similarity_iters,
        seed,
        ..SimilarityConfig::new(norm, config.lambda, config.margin)
    };
    let model = train_similarity(&train, &sim_config)?;
    let witness = Separator::anchor_witness(&model, &train)?;
    let sep = train_separator(
        &model,
        &train,
        &SeparatorConfig {
            max_iters: config.separator_iters,
            step0: 1.0,
            seed,
        },
    )?;
    let report = build_bound_report(&model, &train, config.delta, config.mc_draws, seed)?;

    let train_err = empirical_similarity_error(&model.matrix, &train, config.margin)?;
    let holdout_err = true_similarity_error(&model.matrix, &holdout, config.margin)?;
    let gap = holdout_err - train_err;
    let holdout_hinge = true_hinge_error(&sep, &holdout)?;
    Ok(ExperimentRow {
        m,
        d,
        norm,
        trial,
        seed,
        lambda: config.lambda,
        margin: config.margin,
        delta: config.delta,
        iterations_run: model.iterations_run,
        a_norm: model.norm(),
        final_objective: model.final_objective,
        train_similarity_error: train_err,
        holdout_similarity_error: holdout_err,
        similarity_gap: gap,
        witness_hinge_error: empirical_hinge_error(&witness, &train)?,
        train_hinge_error: empirical_hinge_error(&sep, &train)?,
        holdout_hinge_error: holdout_hinge,
        holdout_zero_one_error: zero_one_error(&sep, &holdout)?,
        x_star: report.x_star,
        r_m_empirical: report.r_m_empirical,
        r_m_std_error: report.r_m_std_error,
        r_m_analytic: report.r_m_analytic,
        r_m: report.r_m,
        theorem1_bound: report.theorem1_bound,
        theorem2_bound: report.theorem2_bound,
        theorem1_violated: gap > report.theorem1_bound,
        theorem2_violated: holdout_hinge > report.theorem2_bound,
    })
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

fn summarize(config: &ExperimentConfig, rows: &[ExperimentRow]) -> ExperimentSummary {
    let mut cells: Vec<CellSummary> = Vec::new();
    for chunk in rows.chunks(config.trials) {
        let first = &chunk[0];
        let n = chunk.len() as f64;
        let mean = |f: &dyn Fn(&ExperimentRow) -> f64| chunk.iter().map(f).sum::<f64>() / n;
        cells.push(CellSummary {
            m: first.m,
            d: first.d,
            norm: first.norm,
            trials: chunk.len(),
            theorem1_violation_frequency: mean(&|r| f64::from(u8::from(r.theorem1_violated))),
            theorem2_violation_frequency: mean(&|r| f64::from(u8::from(r.theorem2_violated))),
            mean_similarity_gap: mean(&|r| r.similarity_gap),
            mean_holdout_hinge_error: mean(&|r| r.holdout_hinge_error),
            mean_r_m_empirical: mean(&|r| r.r_m_empirical),
            mean_theorem1_bound: mean(&|r| r.theorem1_bound),
            mean_theorem2_bound: mean(&|r| r.theorem2_bound),
        });
    }
    let mut by_curve: BTreeMap<(usize, NormKind), Vec<(f64, f64)>> = BTreeMap::new();
    for c in &cells {
        if c.mean_r_m_empirical > 0.0 {
            by_curve
                .entry((c.d, c.norm))
                .or_default()
                .push(((c.m as f64).ln(), c.mean_r_m_empirical.ln()));
        }
    }
    let r_m_scaling = by_curve
        .into_iter()
        .map(|((d, norm), points)| ScalingFit {
            d,
            norm,
            points: points.len(),
            slope: slope(&points),
        })
        .collect();
    ExperimentSummary {
        config: config.clone(),
        runs: rows.len(),
        cells,
        r_m_scaling,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &m in &config.m_values {
        for &d in &config.d_values {
            for &norm in &config.norm_kinds {
                for trial in 0..config.trials {
                    jobs.push((m, d, norm, trial));
                }
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(m, d, norm, trial)| {
            run_one(config, m, d, norm, trial).map_err(|e| {
                let ctx = format!("run m={m} d={d} norm={norm} trial={trial}");
                match e {
                    CliError::Core(inner) | CliError::Context(_, inner) => CliError::Context(ctx, inner),
                    CliError::Usage(msg) => CliError::Usage(format!("{ctx}: {msg}")),
                }
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let summary = summarize(config, &rows);
    Ok(ExperimentOutput { rows, summary })
}

pub fn write_outputs(config: &ExperimentConfig, output: &ExperimentOutput) -> CliResult<()> {
    std::fs::create_dir_all(&config.output_dir).map_err(|source| {
        CliError::Core(simlearn_core::Error::Io {
            path: config.output_dir.clone(),
            source,
        })
    })?;
    write_text(&config.output_dir.join("experiment.csv"), &output.csv())?;
    let json = serde_json::to_string_pretty(&output.summary).map_err(simlearn_core::Error::from)?;
    write_text(&config.output_dir.join("summary.json"), &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorSpec::two_gaussians(2, 2.0, 1.0, 0),
            m_values: vec![20],
            d_values: vec![2],
            norm_kinds: vec![NormKind::Frobenius],
            lambda: 0.1,
            margin: 1.0,
            delta: 0.05,
            trials: 1,
            mc_draws: 50,
            seed: 3,
            output_dir: dir,
            holdout_size: 200,
            similarity_iters: 200,
            separator_iters: 200,
        }
    }

    #[test]
    fn single_run_gives_one_row() {
        let out = run_experiment(&tiny_config(PathBuf::from("unused"))).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.csv().lines().count(), 2);
        let freq = out.summary.cells[0].theorem1_violation_frequency;
        assert!((0.0..=1.0).contains(&freq));
        assert_eq!(out.summary.r_m_scaling[0].slope, None);
    }

    #[test]
    fn columns_match_rows_and_help() {
        let out = run_experiment(&tiny_config(PathBuf::from("unused"))).unwrap();
        assert_eq!(out.rows[0].csv_line().split(',').count(), EXPERIMENT_COLUMNS.len());
        let help: String = crate::EXPERIMENT_HELP.split_whitespace().collect::<Vec<_>>().join(" ");
        assert!(help.contains(&EXPERIMENT_COLUMNS.join(", ")));
        let value = serde_json::to_value(&out.rows[0]).unwrap();
        let keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
        for col in EXPERIMENT_COLUMNS {
            assert!(keys.contains(&col), "{col}");
        }
    }

    #[test]
    fn seeds_independent_of_other_cells() {
        let mut a = tiny_config(PathBuf::from("unused"));
        let one = run_experiment(&a).unwrap();
        a.m_values = vec![10, 20];
        a.norm_kinds = vec![NormKind::L1, NormKind::Frobenius];
        let many = run_experiment(&a).unwrap();
        let same = many
            .rows
            .iter()
            .find(|r| r.m == 20 && r.norm == NormKind::Frobenius)
            .unwrap();
        assert_eq!(same, &one.rows[0]);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [50.0f64, 100.0, 200.0]
            .iter()
            .map(|m| (m.ln(), (2.0 / m.sqrt()).ln()))
            .collect();
        assert!((slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(slope(&pts[..1]), None);
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = tiny_config(PathBuf::from("unused"));
        let mut c = base.clone();
        c.m_values.clear();
        assert!(run_experiment(&c).is_err());
        let mut c = base.clone();
        c.delta = 1.0;
        assert!(run_experiment(&c).is_err());
        let mut c = base;
        c.trials = 0;
        assert!(run_experiment(&c).is_err());
    }
}
