//! JSON configuration schema for the experiment harness.
//!
//! A sweep is described by one JSON document (see `configs/` for annotated
//! examples). `kappa` values may be given as numbers or as the string
//! `"inf"`, since JSON has no literal for infinity.

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use wdrmsvm::data::{largest_remainder_counts, GeneratorSpec};
use wdrmsvm::{KernelConfig, NormKind, SolverOptions};

/// Every trainable model the harness knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Joint multiclass DR model (subgradient, or exact LP with --solver simplex).
    WdrMsvm,
    /// One-vs-all DR hinge ensemble.
    DrOva,
    /// Norm-regularized multiclass SVM (the kappa = inf limit).
    RMsvm,
    /// Regularized multinomial logistic regression (epsilon acts as the
    /// regularization strength).
    RMlr,
    /// Kernelized joint multiclass DR model.
    KwdrMsvm,
    /// Kernelized one-vs-all DR hinge ensemble.
    KdrOva,
    /// Kernelized regularized multiclass SVM (kappa = inf limit).
    KrMsvm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::WdrMsvm => "wdr-msvm",
            ModelKind::DrOva => "dr-ova",
            ModelKind::RMsvm => "r-msvm",
            ModelKind::RMlr => "r-mlr",
            ModelKind::KwdrMsvm => "kwdr-msvm",
            ModelKind::KdrOva => "kdr-ova",
            ModelKind::KrMsvm => "kr-msvm",
        }
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, ModelKind::KwdrMsvm | ModelKind::KdrOva | ModelKind::KrMsvm)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn deserialize_kappa_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    struct Item(#[serde(with = "wdrmsvm::core::serde_kappa")] f64);
    Ok(Vec::<Item>::deserialize(d)?.into_iter().map(|i| i.0).collect())
}

fn serialize_kappa_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Item(#[serde(with = "wdrmsvm::core::serde_kappa")] f64);
    s.collect_seq(v.iter().map(|&k| Item(k)))
}

/// Where the data for one repetition comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    /// Fresh synthetic draw per repetition: one joint draw covering
    /// `train_samples` at `class_weights` plus `test_samples` at
    /// `test_class_weights` (balanced when omitted), so both sides share one
    /// class-geometry assignment.
    Generator {
        classes: usize,
        features: usize,
        train_samples: usize,
        test_samples: usize,
        class_weights: Vec<f64>,
        #[serde(default)]
        test_class_weights: Option<Vec<f64>>,
        #[serde(default = "default_class_sep")]
        class_sep: f64,
        #[serde(default = "default_variance")]
        variance: f64,
    },
    /// A local CSV split per repetition by a seeded stratified shuffle.
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
}

fn default_class_sep() -> f64 {
    3.0
}
fn default_variance() -> f64 {
    1.0
}
fn default_train_fraction() -> f64 {
    0.7
}

impl DataSource {
    /// `allow_full_train` lets single-fit commands use a whole CSV
    /// (train_fraction = 1); sweeps always need a held-out test side.
    pub fn validate(&self, allow_full_train: bool) -> anyhow::Result<()> {
        match self {
            DataSource::Generator {
                classes,
                features,
                train_samples,
                test_samples,
                class_weights,
                test_class_weights,
                class_sep,
                variance,
            } => {
                if *classes < 2 {
                    bail!("generator needs at least 2 classes");
                }
                if *features == 0 {
                    bail!("generator needs at least 1 feature");
                }
                if *train_samples == 0 || *test_samples == 0 {
                    bail!("generator sample counts must be positive");
                }
                if class_weights.len() != *classes {
                    bail!(
                        "{} class weights for {} classes",
                        class_weights.len(),
                        classes
                    );
                }
                if let Some(tw) = test_class_weights {
                    if tw.len() != *classes {
                        bail!("{} test class weights for {} classes", tw.len(), classes);
                    }
                }
                if !(*class_sep > 0.0) || !(*variance > 0.0) {
                    bail!("class_sep and variance must be positive");
                }
                Ok(())
            }
            DataSource::Csv { train_fraction, .. } => {
                let hi_ok = *train_fraction < 1.0 || (allow_full_train && *train_fraction == 1.0);
                if !(*train_fraction > 0.0) || !hi_ok {
                    bail!(
                        "train_fraction must lie in (0, 1){}, got {train_fraction}",
                        if allow_full_train { " or equal 1" } else { "" }
                    );
                }
                Ok(())
            }
        }
    }

    /// Generator spec for a training-only draw (CSV sources have none).
    pub fn train_spec(&self, seed: u64) -> Option<GeneratorSpec> {
        match self {
            DataSource::Generator {
                classes,
                features,
                train_samples,
                class_weights,
                class_sep,
                variance,
                ..
            } => Some(GeneratorSpec {
                classes: *classes,
                features: *features,
                samples: *train_samples,
                class_weights: class_weights.clone(),
                class_sep: *class_sep,
                variance: *variance,
                seed,
            }),
            DataSource::Csv { .. } => None,
        }
    }

    /// Plan for one repetition: a single joint draw (so train and test share
    /// one class-to-vertex assignment) plus the exact per-class counts each
    /// side takes from it. Train counts follow `class_weights`; test counts
    /// follow `test_class_weights`, defaulting to a balanced test set.
    pub fn generator_plan(&self, seed: u64) -> Option<GeneratorPlan> {
        match self {
            DataSource::Generator {
                classes,
                train_samples,
                test_samples,
                class_weights,
                test_class_weights,
                ..
            } => {
                let train_counts = largest_remainder_counts(*train_samples, class_weights);
                let uniform = vec![1.0 / *classes as f64; *classes];
                let test_counts = largest_remainder_counts(
                    *test_samples,
                    test_class_weights.as_deref().unwrap_or(&uniform),
                );
                let total = *train_samples + *test_samples;
                let mut spec = self.train_spec(seed)?;
                spec.samples = total;
                // Integer-ratio weights make the generator's own
                // largest-remainder rounding reproduce these counts exactly.
                spec.class_weights = train_counts
                    .iter()
                    .zip(&test_counts)
                    .map(|(&tr, &te)| (tr + te) as f64 / total as f64)
                    .collect();
                Some(GeneratorPlan { spec, train_counts, test_counts })
            }
            DataSource::Csv { .. } => None,
        }
    }
}

/// One repetition's joint generator draw and how to split it.
#[derive(Debug, Clone)]
pub struct GeneratorPlan {
    pub spec: GeneratorSpec,
    pub train_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
}

/// Iteration/step overrides; unset fields keep [`SolverOptions::default`].
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverPatch {
    pub iterations: Option<usize>,
    pub initial_step: Option<f64>,
}

impl SolverPatch {
    pub fn apply(&self, mut base: SolverOptions) -> SolverOptions {
        if let Some(it) = self.iterations {
            base.iterations = it;
        }
        if let Some(step) = self.initial_step {
            base.initial_step = step;
        }
        base
    }
}

/// Full description of a hyperparameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub models: Vec<ModelKind>,
    pub epsilon_grid: Vec<f64>,
    #[serde(
        deserialize_with = "deserialize_kappa_vec",
        serialize_with = "serialize_kappa_vec"
    )]
    pub kappa_grid: Vec<f64>,
    pub repetitions: usize,
    pub data: DataSource,
    #[serde(default = "default_cost_norm")]
    pub cost_norm: NormKind,
    /// Kernel for the kernel-family models; defaults to RBF with gamma = 1/P.
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    /// Solver knobs for the linear-family models.
    #[serde(default)]
    pub solver: SolverPatch,
    /// Solver knobs for the kernel-family models; falls back to `solver`.
    #[serde(default)]
    pub kernel_solver: Option<SolverPatch>,
    /// Fit feature standardization on each train split and apply to both
    /// sides. Defaults to on; recorded in the output directory's config echo.
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub master_seed: u64,
    /// Output directory; the --out flag overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_cost_norm() -> NormKind {
    NormKind::LInf
}
fn default_true() -> bool {
    true
}

impl SweepConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.models.is_empty() {
            bail!("models must be nonempty");
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.models {
            if !seen.insert(*m) {
                bail!("model {m} listed twice");
            }
        }
        if self.epsilon_grid.is_empty() || self.kappa_grid.is_empty() {
            bail!("epsilon_grid and kappa_grid must be nonempty");
        }
        for &e in &self.epsilon_grid {
            if !(e >= 0.0) || !e.is_finite() {
                bail!("epsilon values must be finite and nonnegative, got {e}");
            }
        }
        for &k in &self.kappa_grid {
            if k.is_nan() || k < 0.0 {
                bail!("kappa values must be nonnegative, got {k}");
            }
        }
        if self.repetitions == 0 {
            bail!("repetitions must be >= 1");
        }
        self.data.validate(false)
    }

    /// Kernel used by kernel-family models: configured or defaulted per P.
    pub fn kernel_for(&self, feature_count: usize) -> KernelConfig {
        self.kernel
            .unwrap_or_else(|| KernelConfig::default_for(feature_count))
    }

    pub fn kernel_solver(&self) -> SolverPatch {
        self.kernel_solver.unwrap_or(self.solver)
    }
}

/// Description of a single fit: used by `train`, `export-lp`, and as the
/// data/instance half of `oracle`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub data: DataSource,
    pub epsilon: f64,
    #[serde(with = "wdrmsvm::core::serde_kappa")]
    pub kappa: f64,
    #[serde(default = "default_cost_norm")]
    pub cost_norm: NormKind,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub solver: SolverPatch,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate_for_train(&self) -> anyhow::Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            bail!("epsilon must be finite and nonnegative, got {}", self.epsilon);
        }
        if self.kappa.is_nan() || self.kappa < 0.0 {
            bail!("kappa must be nonnegative, got {}", self.kappa);
        }
        self.data.validate(true)
    }
}

/// Reads and validates a JSON config file of either kind.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
