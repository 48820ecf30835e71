//! Distributionally robust multiclass SVM over a Wasserstein ball.
//!
//! The model minimizes the worst-case expected Crammer-Singer loss over all
//! distributions within a type-1 Wasserstein distance `epsilon` of the
//! empirical distribution, with ground cost
//!
//! ```text
//! d((x, y), (x', y')) = ||x - x'|| + kappa * 1{y != y'}
//! ```
//!
//! so `kappa` prices label flips and `epsilon` sizes the ambiguity set.
//! The crate provides:
//!
//! * [`linear_solver`]: the projected subgradient trainer for the linear
//!   classifier, plus the regularized limit (`kappa = inf`),
//! * [`reference_solver`]: the exact epigraph LP, a dense simplex, LP text
//!   export/import, and the closed-form worst-case risk of a fixed model,
//! * [`kernel`]: the kernelized upper-bound program and its trainer,
//! * [`baselines`]: one-vs-all DR hinge SVMs, regularized multinomial
//!   logistic regression, and the regularized multiclass SVM,
//! * [`data`]: synthetic blob generation, CSV ingestion, standardization,
//!   stratified splits.

pub mod baselines;
pub mod core;
pub mod data;
pub mod error;
pub mod kernel;
pub mod linear_solver;
pub mod loss;
pub mod reference_solver;

pub use crate::baselines::{KernelOvaModel, OvaModel, RmlrFit};
pub use crate::core::{
    predict, Dataset, Hyperparams, KernelConfig, KernelModel, LinearModel, SolverOptions,
};
pub use crate::error::Error;
pub use crate::loss::NormKind;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
