use serde::Serialize;
use simlearn_core::bounds::{build_bound_report, check_delta, khinchin_check, KhinchinMode};
use simlearn_core::rng::stream_rng;
use simlearn_core::separator::zero_one_error;
use simlearn_core::{
    empirical_hinge_error, empirical_similarity_error, load_csv, similarity_objective, train_separator,
    train_similarity, Dataset, Separator, SeparatorConfig, SimilarityConfig, SimilarityModel,
};

use crate::experiment::{run_experiment, write_outputs, ExperimentConfig};
use crate::{
    read_text, write_text, BoundsArgs, CliError, CliResult, EvalArgs, ExperimentArgs, KhinchinArgs, SeparatorArgs,
    TrainArgs,
};

fn load_data(path: &std::path::Path) -> CliResult<Dataset> {
    load_csv(path).map_err(|e| CliError::Context(format!("reading dataset {}", path.display()), e))
}

fn load_model(path: &std::path::Path) -> CliResult<SimilarityModel> {
    SimilarityModel::from_json(&read_text(path)?)
        .map_err(|e| CliError::Context(format!("reading model {}", path.display()), e))
}

fn check_dims(model: &SimilarityModel, data: &Dataset) -> CliResult<()> {
    if model.dim() != data.dim() {
        return Err(CliError::Usage(format!(
            "model has dimension {} but the dataset has {} features",
            model.dim(),
            data.dim()
        )));
    }
    Ok(())
}

pub fn train(a: &TrainArgs) -> CliResult<String> {
    let data = load_data(&a.data)?;
    let config = SimilarityConfig {
        max_iters: a.solver.max_iters,
        step0: a.solver.step0,
        rel_tol: a.rel_tol,
        seed: a.solver.seed,
        ..SimilarityConfig::new(a.norm, a.lambda, a.margin)
    };
    let model = train_similarity(&data, &config)?;
    write_text(&a.out, &model.to_json()?)?;
    Ok(format!(
        "objective {} after {} iterations, norm {}\n",
        model.final_objective,
        model.iterations_run,
        model.norm()
    ))
}

pub fn separator(a: &SeparatorArgs) -> CliResult<String> {
    let model = load_model(&a.model)?;
    let data = load_data(&a.data)?;
    check_dims(&model, &data)?;
    let config = SeparatorConfig {
        max_iters: a.solver.max_iters,
        step0: a.solver.step0,
        seed: a.solver.seed,
    };
    let sep = train_separator(&model, &data, &config)?;
    write_text(&a.out, &sep.to_json()?)?;
    let hinge = empirical_hinge_error(&sep, &data)?;
    let e_z = empirical_similarity_error(&model.matrix, &data, model.config.margin)?;
    Ok(format!("hinge error {hinge} (similarity error {e_z})\n"))
}

pub fn bounds(a: &BoundsArgs) -> CliResult<String> {
    check_delta(a.delta)?;
    let model = load_model(&a.model)?;
    let data = load_data(&a.data)?;
    check_dims(&model, &data)?;
    let report = build_bound_report(&model, &data, a.delta, a.mc_draws, a.seed)?;
    write_text(&a.out, &report.to_json()?)?;
    Ok(format!(
        "theorem1 {} theorem2 {}\n",
        report.theorem1_bound, report.theorem2_bound
    ))
}

#[derive(Debug, Serialize)]
struct EvalReport {
    m: usize,
    norm_kind: simlearn_core::NormKind,
    lambda: f64,
    margin: f64,
    a_norm: f64,
    similarity_error: f64,
    objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hinge_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_one_error: Option<f64>,
}

pub fn eval(a: &EvalArgs) -> CliResult<String> {
    let model = load_model(&a.model)?;
    let data = load_data(&a.data)?;
    check_dims(&model, &data)?;
    let (hinge_error, zero_one) = match &a.separator {
        Some(path) => {
            let sep = Separator::from_json(&read_text(path)?)
                .map_err(|e| CliError::Context(format!("reading separator {}", path.display()), e))?;
            if sep.model.dim() != data.dim() {
                return Err(CliError::Usage(format!(
                    "separator has dimension {} but the dataset has {} features",
                    sep.model.dim(),
                    data.dim()
                )));
            }
            (Some(empirical_hinge_error(&sep, &data)?), Some(zero_one_error(&sep, &data)?))
        }
        None => (None, None),
    };
    let report = EvalReport {
        m: data.len(),
        norm_kind: model.config.norm_kind,
        lambda: model.config.lambda,
        margin: model.config.margin,
        a_norm: model.norm(),
        similarity_error: empirical_similarity_error(&model.matrix, &data, model.config.margin)?,
        objective: similarity_objective(&model.matrix, &data, &model.config)?,
        hinge_error,
        zero_one_error: zero_one,
    };
    let json = serde_json::to_string_pretty(&report).map_err(simlearn_core::Error::from)?;
    match &a.out {
        Some(path) => {
            write_text(path, &json)?;
            Ok(String::new())
        }
        None => Ok(json + "\n"),
    }
}

pub fn experiment(a: &ExperimentArgs) -> CliResult<String> {
    let config: ExperimentConfig = serde_json::from_str(&read_text(&a.config)?)
        .map_err(|e| CliError::Context(format!("reading config {}", a.config.display()), e.into()))?;
    let output = run_experiment(&config)?;
    write_outputs(&config, &output)?;
    Ok(format!(
        "{} runs written to {}\n",
        output.rows.len(),
        config.output_dir.display()
    ))
}

pub const KHINCHIN_HEADER: &str = "n,p,q,lhs,rhs,slack,holds";

pub fn khinchin(a: &KhinchinArgs) -> CliResult<String> {
    let mode = match a.draws {
        Some(draws) => KhinchinMode::MonteCarlo { draws, seed: a.seed },
        None => KhinchinMode::Exact,
    };
    let mut cases: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    match &a.f {
        Some(f) => cases.push((f.clone(), a.p, a.q)),
        None => {
            if a.max_n == 0 {
                return Err(CliError::Usage("--max-n must be at least 1".into()));
            }
            use rand::Rng;
            let mut rng = stream_rng(a.seed, 0);
            for _ in 0..a.trials {
                let n = rng.random_range(1..=a.max_n);
                let f = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let p = [1.5, 2.0][rng.random_range(0..2)];
                let q = [3.0, 4.0, 6.0][rng.random_range(0..3)];
                cases.push((f, p, q));
            }
        }
    }
    let mut csv = String::from(KHINCHIN_HEADER);
    csv.push('\n');
    let mut violations = 0;
    for (f, p, q) in &cases {
        let out = khinchin_check(f, *p, *q, mode)?;
        if !out.holds {
            violations += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f.len(),
            p,
            q,
            out.lhs,
            out.rhs,
            out.slack(),
            u8::from(out.holds)
        ));
    }
    let summary = format!("{violations} of {} cases violate the inequality\n", cases.len());
    match &a.out {
        Some(path) => {
            write_text(path, &csv)?;
            Ok(summary)
        }
        None => Ok(csv),
    }
}
