//! Shared domain types: datasets, fitted models, hyperparameters.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::loss::NormKind;
use crate::Result;

/// A labeled sample set. Features are an N×P real matrix, labels an N×C
/// one-hot matrix; the class of sample n is the position of the 1 in row n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array2<f64>,
}

impl Dataset {
    /// Builds a dataset after validating shapes and the one-hot structure.
    ///
    /// C = 2 is accepted with a warning: the multiclass formulas stay valid
    /// but the model is then an over-parameterized binary classifier.
    pub fn new(features: Array2<f64>, labels: Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        let c = labels.ncols();
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no samples".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidInput("dataset has no features".into()));
        }
        if labels.nrows() != n {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} label rows",
                n,
                labels.nrows()
            )));
        }
        if c < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 classes, got {c}"
            )));
        }
        if c == 2 {
            log::warn!("2-class dataset: the multiclass formulation is valid but overkill here");
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite feature value {v}")));
        }
        for (i, row) in labels.rows().into_iter().enumerate() {
            let mut ones = 0usize;
            for &l in row {
                if l == 1.0 {
                    ones += 1;
                } else if l != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "label row {i} has entry {l}, expected 0 or 1"
                    )));
                }
            }
            if ones != 1 {
                return Err(Error::InvalidInput(format!(
                    "label row {i} has {ones} ones, expected exactly 1"
                )));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn sample_count(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.labels.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array2<f64> {
        &self.labels
    }

    pub fn feature_row(&self, n: usize) -> ArrayView1<'_, f64> {
        self.features.row(n)
    }

    /// Class index of sample n (position of the 1 in its label row).
    pub fn label_class(&self, n: usize) -> usize {
        self.labels
            .row(n)
            .iter()
            .position(|&l| l == 1.0)
            .expect("label rows are validated one-hot")
    }

    /// Rebuilds a dataset from a subset of row indices.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let p = self.feature_count();
        let c = self.class_count();
        let mut features = Array2::zeros((rows.len(), p));
        let mut labels = Array2::zeros((rows.len(), c));
        for (i, &r) in rows.iter().enumerate() {
            if r >= self.sample_count() {
                return Err(Error::Dimension(format!(
                    "row index {r} out of range for {} samples",
                    self.sample_count()
                )));
            }
            features.row_mut(i).assign(&self.features.row(r));
            labels.row_mut(i).assign(&self.labels.row(r));
        }
        Dataset::new(features, labels)
    }
}

/// Kernel selection. `gamma` defaults to 1/P when built via [`KernelConfig::default_for`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelConfig {
    Rbf { gamma: f64 },
    Linear,
}

impl KernelConfig {
    /// RBF kernel with the default bandwidth gamma = 1/P.
    pub fn default_for(feature_count: usize) -> Self {
        KernelConfig::Rbf {
            gamma: 1.0 / feature_count.max(1) as f64,
        }
    }
}

/// Knobs for the iterative solvers.
///
/// `iterations` is the step count T, `initial_step` the sigma(0) of the
/// sigma(t) = sigma(0)/t schedule. `projection_tol` bounds the 1-D search
/// inside the Euclidean projection. `penalty_rho` is the starting constraint
/// penalty of the kernel trainer. `seed` is carried for reproducibility
/// bookkeeping; the subgradient path itself is deterministic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub iterations: usize,
    pub initial_step: f64,
    pub seed: u64,
    pub projection_tol: f64,
    pub penalty_rho: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            iterations: 400,
            initial_step: 1.0,
            seed: 0,
            projection_tol: 1e-10,
            penalty_rho: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be >= 1".into()));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "initial_step must be positive, got {}",
                self.initial_step
            )));
        }
        if !(self.projection_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "projection_tol must be positive, got {}",
                self.projection_tol
            )));
        }
        if !(self.penalty_rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "penalty_rho must be positive, got {}",
                self.penalty_rho
            )));
        }
        Ok(())
    }
}

/// Serde representation of `kappa` that survives JSON: infinity is written
/// as the string `"inf"` (serde_json would otherwise emit `null`, which does
/// not read back), finite values as plain numbers.
pub mod serde_kappa {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t)
                if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") =>
            {
                Ok(f64::INFINITY)
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got \"{t}\""
            ))),
        }
    }
}

/// Ambiguity-set hyperparameters. `kappa = f64::INFINITY` prices label flips
/// out entirely and collapses the model to norm-regularized risk minimization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epsilon: f64,
    #[serde(with = "serde_kappa")]
    pub kappa: f64,
    pub cost_norm: NormKind,
    pub solver: SolverOptions,
}

impl Hyperparams {
    pub fn new(epsilon: f64, kappa: f64, cost_norm: NormKind) -> Self {
        Self {
            epsilon,
            kappa,
            cost_norm,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "epsilon must be a finite nonnegative real, got {}",
                self.epsilon
            )));
        }
        if self.kappa.is_nan() || self.kappa < 0.0 {
            return Err(Error::InvalidInput(format!(
                "kappa must be nonnegative (inf allowed), got {}",
                self.kappa
            )));
        }
        self.solver.validate()
    }
}

/// Linear classifier x -> argmax_c (M x)_c with the robustness certificate
/// `lambda` (the Lipschitz budget the training problem charged for) and the
/// achieved training objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub m: Array2<f64>,
    pub lambda: f64,
    pub objective: f64,
}

impl LinearModel {
    /// Slack of the constraint lambda >= max pairwise row-difference norm.
    /// Negative slack beyond tolerance means the certificate is violated.
    pub fn pair_norm_slack(&self, cost_norm: NormKind) -> f64 {
        self.lambda - crate::loss::max_pair_constraint_norm(&self.m, cost_norm)
    }
}

/// Kernelized classifier: scores of x are sum_n A[., n] k(x, x_n) over the
/// stored training features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelModel {
    pub a: Array2<f64>,
    pub train_features: Array2<f64>,
    pub kernel: KernelConfig,
    pub lambda: f64,
    pub objective: f64,
}

/// Predicted class: argmax over class scores (M x), lowest index on ties.
pub fn predict(model: &LinearModel, x: ArrayView1<'_, f64>) -> Result<usize> {
    if model.m.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "model expects {} features, sample has {}",
            model.m.ncols(),
            x.len()
        )));
    }
    let scores = model.m.dot(&x);
    Ok(argmax_lowest(scores.iter().copied()))
}

/// First index attaining the maximum. Callers rely on the lowest-index
/// tie-break, so keep the strict `>` comparison.
pub(crate) fn argmax_lowest(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in scores.into_iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}
