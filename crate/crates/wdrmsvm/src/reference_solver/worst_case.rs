//! Closed-form worst-case CS risk for a fixed coefficient matrix.
//!
//! For fixed M the adversary's problem collapses to a 1-D piecewise-linear
//! minimization over the dual multiplier:
//!
//! ```text
//! min_{lambda >= lambda_min}  lambda*eps + (1/N) sum_n max(a_n, b_n - lambda*kappa)
//! ```
//!
//! with `a_n` the CS loss at the true label, `b_n` the best CS loss over
//! flipped labels, and `lambda_min` the largest pair-norm of M's rows (the
//! same feasibility threshold the training LP and projection enforce). The
//! minimum sits at `lambda_min` or at a breakpoint `(b_n - a_n)/kappa`, so
//! evaluating those candidates is exact — no grid search.

use ndarray::Array2;

use crate::core::Dataset;
use crate::error::Error;
use crate::linear_solver::{branch_values, min_over_lambda};
use crate::loss::{max_pair_constraint_norm, NormKind};
use crate::Result;

/// Exact worst-case CS risk of `m` over the transport ball of radius `eps`
/// with label-flip price `kappa` (both cost norms supported). `kappa = inf`
/// prices flips out entirely and returns `lambda_min*eps + mean CS loss`;
/// `eps = 0` returns the mean CS loss when `kappa > 0` and
/// `mean max(a_n, b_n)` when `kappa = 0`.
pub fn worst_case_risk(
    m: &Array2<f64>,
    dataset: &Dataset,
    eps: f64,
    kappa: f64,
    cost_norm: NormKind,
) -> Result<f64> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "epsilon must be finite and nonnegative, got {eps}"
        )));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    if m.nrows() != dataset.class_count() || m.ncols() != dataset.feature_count() {
        return Err(Error::Dimension(format!(
            "M is {}x{} but dataset has {} classes and {} features",
            m.nrows(),
            m.ncols(),
            dataset.class_count(),
            dataset.feature_count()
        )));
    }
    let lambda_min = max_pair_constraint_norm(m, cost_norm);
    let branches = branch_values(m, dataset);
    let (_, raw) = min_over_lambda(&branches, eps, kappa, lambda_min);
    // branch values are on the raw scale, one below the CS-loss scale
    Ok(raw + 1.0)
}
