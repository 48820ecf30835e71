//! Versioned JSON model files: matrix payloads plus everything needed to
//! reapply the model to new data (hyperparameters, the fitted feature
//! standardizer, and the label-name mapping).

use std::path::Path;

use anyhow::{bail, Context};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use wdrmsvm::baselines::{KernelOvaModel, OvaModel, RmlrFit};
use wdrmsvm::data::FeatureStats;
use wdrmsvm::{Hyperparams, KernelModel, LinearModel};

use crate::config::ModelKind;

pub const FORMAT_VERSION: u32 = 1;

/// The trained parameters, one variant per model family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Linear {
        m: Array2<f64>,
        lambda: f64,
        objective: f64,
    },
    Kernel {
        a: Array2<f64>,
        train_features: Array2<f64>,
        kernel: wdrmsvm::KernelConfig,
        lambda: f64,
        objective: f64,
    },
    Ova {
        w: Array2<f64>,
        lambda: Array1<f64>,
        objectives: Array1<f64>,
    },
    KernelOva {
        a: Array2<f64>,
        train_features: Array2<f64>,
        kernel: wdrmsvm::KernelConfig,
        lambda: Array1<f64>,
        objectives: Array1<f64>,
    },
    Logistic {
        m: Array2<f64>,
        objective: f64,
        grad_norm: f64,
        iterations_run: usize,
    },
}

/// On-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: ModelKind,
    pub hyperparams: Hyperparams,
    /// Standardizer fitted on the training split, when standardization was on.
    pub standardizer: Option<FeatureStats>,
    /// Class-index -> label-name mapping from training time.
    pub label_names: Vec<String>,
    pub payload: Payload,
}

impl ModelFile {
    pub fn from_linear(
        model: ModelKind,
        fit: &LinearModel,
        hyperparams: Hyperparams,
        standardizer: Option<FeatureStats>,
        label_names: Vec<String>,
    ) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            model,
            hyperparams,
            standardizer,
            label_names,
            payload: Payload::Linear {
                m: fit.m.clone(),
                lambda: fit.lambda,
                objective: fit.objective,
            },
        }
    }

    pub fn from_kernel(
        model: ModelKind,
        fit: &KernelModel,
        hyperparams: Hyperparams,
        standardizer: Option<FeatureStats>,
        label_names: Vec<String>,
    ) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            model,
            hyperparams,
            standardizer,
            label_names,
            payload: Payload::Kernel {
                a: fit.a.clone(),
                train_features: fit.train_features.clone(),
                kernel: fit.kernel,
                lambda: fit.lambda,
                objective: fit.objective,
            },
        }
    }

    pub fn from_ova(
        fit: &OvaModel,
        hyperparams: Hyperparams,
        standardizer: Option<FeatureStats>,
        label_names: Vec<String>,
    ) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            model: ModelKind::DrOva,
            hyperparams,
            standardizer,
            label_names,
            payload: Payload::Ova {
                w: fit.w.clone(),
                lambda: fit.lambda.clone(),
                objectives: fit.objectives.clone(),
            },
        }
    }

    pub fn from_kernel_ova(
        fit: &KernelOvaModel,
        hyperparams: Hyperparams,
        standardizer: Option<FeatureStats>,
        label_names: Vec<String>,
    ) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            model: ModelKind::KdrOva,
            hyperparams,
            standardizer,
            label_names,
            payload: Payload::KernelOva {
                a: fit.a.clone(),
                train_features: fit.train_features.clone(),
                kernel: fit.kernel,
                lambda: fit.lambda.clone(),
                objectives: fit.objectives.clone(),
            },
        }
    }

    pub fn from_rmlr(
        fit: &RmlrFit,
        hyperparams: Hyperparams,
        standardizer: Option<FeatureStats>,
        label_names: Vec<String>,
    ) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            model: ModelKind::RMlr,
            hyperparams,
            standardizer,
            label_names,
            payload: Payload::Logistic {
                m: fit.model.m.clone(),
                objective: fit.model.objective,
                grad_norm: fit.grad_norm,
                iterations_run: fit.iterations_run,
            },
        }
    }

    /// The training objective recorded in the payload.
    pub fn objective(&self) -> f64 {
        match &self.payload {
            Payload::Linear { objective, .. }
            | Payload::Kernel { objective, .. }
            | Payload::Logistic { objective, .. } => *objective,
            Payload::Ova { objectives, .. } | Payload::KernelOva { objectives, .. } => {
                objectives.iter().sum::<f64>() / objectives.len() as f64
            }
        }
    }

    /// Predicts the class index of one (already standardized) feature row.
    pub fn predict(&self, x: ndarray::ArrayView1<'_, f64>) -> anyhow::Result<usize> {
        let class = match &self.payload {
            Payload::Linear { m, lambda, objective } => {
                let model = LinearModel {
                    m: m.clone(),
                    lambda: *lambda,
                    objective: *objective,
                };
                wdrmsvm::predict(&model, x)?
            }
            Payload::Logistic { m, objective, .. } => {
                let model = LinearModel {
                    m: m.clone(),
                    lambda: 0.0,
                    objective: *objective,
                };
                wdrmsvm::predict(&model, x)?
            }
            Payload::Kernel {
                a,
                train_features,
                kernel,
                lambda,
                objective,
            } => {
                let model = KernelModel {
                    a: a.clone(),
                    train_features: train_features.clone(),
                    kernel: *kernel,
                    lambda: *lambda,
                    objective: *objective,
                };
                wdrmsvm::kernel::predict_kernel(&model, x)?
            }
            Payload::Ova { w, lambda, objectives } => {
                let model = OvaModel {
                    w: w.clone(),
                    lambda: lambda.clone(),
                    objectives: objectives.clone(),
                };
                wdrmsvm::baselines::predict_ova(&model, x)?
            }
            Payload::KernelOva {
                a,
                train_features,
                kernel,
                lambda,
                objectives,
            } => {
                let model = KernelOvaModel {
                    a: a.clone(),
                    train_features: train_features.clone(),
                    kernel: *kernel,
                    lambda: lambda.clone(),
                    objectives: objectives.clone(),
                };
                wdrmsvm::baselines::predict_kdr_ova(&model, x)?
            }
        };
        Ok(class)
    }

    /// The linear score matrix, when this model has one (needed by `oracle`).
    pub fn linear_m(&self) -> Option<&Array2<f64>> {
        match &self.payload {
            Payload::Linear { m, .. } | Payload::Logistic { m, .. } => Some(m),
            _ => None,
        }
    }
}

pub fn save_model(file: &ModelFile, path: &Path) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(file).context("serializing model")?;
    std::fs::write(path, text).with_context(|| format!("writing model {}", path.display()))?;
    Ok(())
}

pub fn load_model(path: &Path) -> anyhow::Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model {}", path.display()))?;
    let file: ModelFile =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
    if file.format_version != FORMAT_VERSION {
        bail!(
            "model file {} has format_version {}, this build reads {}",
            path.display(),
            file.format_version,
            FORMAT_VERSION
        );
    }
    Ok(file)
}
