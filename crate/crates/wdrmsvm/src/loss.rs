//! Crammer-Singer loss, its constituents, and the norm toolbox.
//!
//! The multiclass hinge ("CS") loss of a score matrix M at a labeled point
//! (x, y), with y one-hot, is
//!
//! ```text
//! l_cs(M; (x, y)) = max_c { e_c.(Mx - y) + 1 } - y.Mx
//! ```
//!
//! It is zero exactly when the true class wins every other class by margin 1.
//! Decomposing over the max gives one affine *constituent* per class c,
//!
//! ```text
//! l_c(M; (x, y)) = e_c.(Mx - y) + 1 - y.Mx,
//! ```
//!
//! whose Lipschitz modulus in x is the dual norm of (e_c - y)^T M. Those
//! moduli are what the robust reformulation charges the budget lambda for.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::core::{argmax_lowest, Dataset};
use crate::error::Error;
use crate::Result;

/// Norm used in the transport cost on feature displacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    LInf,
    L1,
}

impl NormKind {
    /// The dual norm kind: dual(LInf) = L1 and dual(L1) = LInf, so
    /// `k.dual().dual() == k`.
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::LInf => NormKind::L1,
            NormKind::L1 => NormKind::LInf,
        }
    }

    /// Evaluates this norm on a vector.
    pub fn eval(self, v: ArrayView1<'_, f64>) -> f64 {
        match self {
            NormKind::LInf => v.iter().fold(0.0, |a, &x| a.max(x.abs())),
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        }
    }
}

/// Dual norm of `v` relative to cost norm `k` (Hölder pairing).
pub fn dual_norm(v: ArrayView1<'_, f64>, k: NormKind) -> f64 {
    k.dual().eval(v)
}

fn check_model_sample(m: &Array2<f64>, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if m.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "M has {} columns but x has {} entries",
            m.ncols(),
            x.len()
        )));
    }
    if m.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "M has {} rows but y has {} entries",
            m.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// CS loss of M at (x, y); y must be one-hot.
pub fn cs_loss(m: &Array2<f64>, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    check_model_sample(m, x, y)?;
    let scores = m.dot(&x);
    let hinge = scores
        .iter()
        .zip(y.iter())
        .map(|(&s, &yc)| s - yc + 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let truth = scores.iter().zip(y.iter()).map(|(&s, &yc)| s * yc).sum::<f64>();
    Ok(hinge - truth)
}

/// Class-c constituent of the CS loss at (x, y_check): the affine piece
/// e_c.(Mx - y_check) + 1 - y_check.Mx of the max in [`cs_loss`].
pub fn cs_constituent(
    m: &Array2<f64>,
    x: ArrayView1<'_, f64>,
    y_check: ArrayView1<'_, f64>,
    c: usize,
) -> Result<f64> {
    check_model_sample(m, x, y_check)?;
    if c >= m.nrows() {
        return Err(Error::Dimension(format!(
            "class index {c} out of range for {} classes",
            m.nrows()
        )));
    }
    let scores = m.dot(&x);
    let truth = scores
        .iter()
        .zip(y_check.iter())
        .map(|(&s, &yc)| s * yc)
        .sum::<f64>();
    Ok(scores[c] - y_check[c] + 1.0 - truth)
}

/// Fraction of samples whose argmax score disagrees with the label.
pub fn empirical_error(m: &Array2<f64>, dataset: &Dataset) -> Result<f64> {
    if m.ncols() != dataset.feature_count() || m.nrows() != dataset.class_count() {
        return Err(Error::Dimension(format!(
            "M is {}x{} but dataset has {} classes and {} features",
            m.nrows(),
            m.ncols(),
            dataset.class_count(),
            dataset.feature_count()
        )));
    }
    let mut wrong = 0usize;
    for n in 0..dataset.sample_count() {
        let scores = m.dot(&dataset.feature_row(n));
        if argmax_lowest(scores.iter().copied()) != dataset.label_class(n) {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / dataset.sample_count() as f64)
}

/// Mean per-class correct classification rate: the unweighted average over
/// classes of the fraction of that class's samples the predictor labels
/// correctly. Classes with no samples in `dataset` are left out of the
/// average, so imbalance in the evaluation split never weights the score.
pub fn mean_class_correct_rate<F>(dataset: &Dataset, mut predictor: F) -> Result<f64>
where
    F: FnMut(ArrayView1<'_, f64>) -> Result<usize>,
{
    let c = dataset.class_count();
    let mut hit = vec![0usize; c];
    let mut cnt = vec![0usize; c];
    for n in 0..dataset.sample_count() {
        let truth = dataset.label_class(n);
        cnt[truth] += 1;
        if predictor(dataset.feature_row(n))? == truth {
            hit[truth] += 1;
        }
    }
    let mut total = 0.0;
    let mut present = 0usize;
    for k in 0..c {
        if cnt[k] > 0 {
            total += hit[k] as f64 / cnt[k] as f64;
            present += 1;
        }
    }
    if present == 0 {
        return Err(Error::InvalidInput(
            "cannot score an empty dataset".into(),
        ));
    }
    Ok(total / present as f64)
}

/// Mean CS loss over a dataset.
pub fn mean_cs_loss(m: &Array2<f64>, dataset: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for n in 0..dataset.sample_count() {
        total += cs_loss(m, dataset.feature_row(n), dataset.labels().row(n))?;
    }
    Ok(total / dataset.sample_count() as f64)
}

/// Lipschitz modulus of the (i, j) class-pair constituent in x: the dual
/// norm of row_i(M) - row_j(M) under cost norm `k`.
pub fn lipschitz_modulus(m: &Array2<f64>, i: usize, j: usize, k: NormKind) -> Result<f64> {
    if i >= m.nrows() || j >= m.nrows() {
        return Err(Error::Dimension(format!(
            "class pair ({i}, {j}) out of range for {} classes",
            m.nrows()
        )));
    }
    let diff = &m.row(i) - &m.row(j);
    Ok(dual_norm(diff.view(), k))
}

/// Transport cost between labeled points: ||x - x'||_k + kappa if the labels
/// differ, ||x - x'||_k otherwise. `kappa = inf` makes differing labels
/// infinitely expensive.
pub fn transport_cost(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
    x2: ArrayView1<'_, f64>,
    y2: ArrayView1<'_, f64>,
    kappa: f64,
    k: NormKind,
) -> Result<f64> {
    if x.len() != x2.len() || y.len() != y2.len() {
        return Err(Error::Dimension(
            "transport cost endpoints have mismatched shapes".into(),
        ));
    }
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::InvalidInput(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    let diff = &x - &x2;
    let base = k.eval(diff.view());
    let flipped = y.iter().zip(y2.iter()).any(|(&a, &b)| a != b);
    Ok(if flipped { base + kappa } else { base })
}

/// Norm charged against lambda in the reformulation's class-pair constraints:
/// the cost norm itself applied to row_i(M) - row_j(M).
///
/// The reformulation's derivation states the constraint with the dual norm,
/// but the subgradient algorithm's projection (per-column range <= lambda),
/// the LP row counts, and the worst-case-risk dual all use the cost norm on
/// row differences; the solver side of this crate follows that consistently
/// so the three routes agree to tolerance instead of to a norm-equivalence
/// factor.
pub fn pair_constraint_norm(m: &Array2<f64>, i: usize, j: usize, k: NormKind) -> f64 {
    let diff = &m.row(i) - &m.row(j);
    k.eval(diff.view())
}

/// Max of [`pair_constraint_norm`] over all class pairs (0 when C < 2).
pub fn max_pair_constraint_norm(m: &Array2<f64>, k: NormKind) -> f64 {
    let c = m.nrows();
    let mut best = 0.0f64;
    for i in 0..c {
        for j in (i + 1)..c {
            best = best.max(pair_constraint_norm(m, i, j, k));
        }
    }
    best
}
