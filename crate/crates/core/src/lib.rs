//! Regularized bilinear similarity learning with general matrix norms.
//!
//! A symmetric matrix `A` defines `K_A(x, x') = xᵀ A x'`. Training minimizes
//! the empirical similarity error plus `λ‖A‖` for one of four matrix norms,
//! after which an L1-constrained linear separator is fitted over the learnt
//! similarities to the training points. The [`bounds`] module computes the
//! quantities entering the generalization certificates.

pub mod bounds;
pub mod data;
pub mod error;
pub mod linalg;
pub mod norms;
pub mod rng;
pub mod separator;
pub mod similarity;

pub use bounds::{
    build_bound_report, khinchin_check, rademacher_analytic, rademacher_empirical, theorem1_bound,
    theorem2_bound, x_star, BoundReport, KhinchinMode, KhinchinOutcome, MonteCarloEstimate,
};
pub use data::{generate, load_csv, save_csv, split, Dataset, GeneratorKind, GeneratorSpec};
pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
pub use norms::{dual_norm, dual_norm_rank1, norm, prox, NormKind};
pub use separator::{
    classify, empirical_hinge_error, project_l1_ball, separator_value, train_separator, true_hinge_error,
    Separator, SeparatorConfig,
};
pub use similarity::{
    empirical_similarity_error, similarity_objective, similarity_score, train_similarity, true_similarity_error,
    SimilarityConfig, SimilarityModel,
};
