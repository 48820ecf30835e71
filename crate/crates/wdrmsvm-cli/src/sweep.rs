//! Sweep execution: every (model, epsilon, kappa, repetition) cell is an
//! independent task on a bounded worker pool. Per-repetition seeds are
//! derived by hashing (master seed, model name, cell indices, repetition),
//! so adding a model or grid point never perturbs other cells' randomness,
//! and results are merged in task order, so output is independent of
//! scheduling.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use ndarray::ArrayView1;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use wdrmsvm::baselines::{
    fit_dr_ova, fit_dr_ova_lp, fit_kdr_ova, fit_rmlr, fit_rmsvm, predict_kdr_ova, predict_ova,
};
use wdrmsvm::data::{
    generate_hypercube, load_csv, standardize_apply, standardize_fit, stratified_split, SplitSpec,
};
use wdrmsvm::kernel::{fit_kernel, predict_kernel};
use wdrmsvm::linear_solver::fit;
use wdrmsvm::loss::mean_class_correct_rate;
use wdrmsvm::reference_solver::{build_lp, solve_lp};
use wdrmsvm::{predict, Dataset, Hyperparams, LinearModel, SolverOptions};

use crate::config::{DataSource, ModelKind, SweepConfig};

/// Which training route the CLI was asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverChoice {
    /// Projected subgradient descent (every model supports it).
    Subgradient,
    /// Exact LP via the reference simplex (wdr-msvm and dr-ova only).
    Simplex,
}

/// One successful cell repetition.
#[derive(Debug, Clone)]
pub struct Record {
    pub model: ModelKind,
    pub epsilon: f64,
    pub kappa: f64,
    pub rep: usize,
    pub mccr_train: f64,
    pub mccr_test: f64,
    pub objective: f64,
    pub seed: u64,
    pub wall_ms: u128,
}

/// One failed cell repetition (recorded, not fatal).
#[derive(Debug, Clone)]
pub struct Failure {
    pub model: ModelKind,
    pub epsilon: f64,
    pub kappa: f64,
    pub rep: usize,
    pub seed: u64,
    pub message: String,
}

/// Per-cell aggregate over repetitions.
#[derive(Debug, Clone)]
pub struct CellAggregate {
    pub model: ModelKind,
    pub epsilon: f64,
    pub kappa: f64,
    pub reps: usize,
    pub mean_mccr_test: f64,
    /// Sample standard deviation (ddof = 1); 0 for a single repetition.
    pub std_mccr_test: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<Record>,
    pub failures: Vec<Failure>,
    pub aggregates: Vec<CellAggregate>,
}

/// Seed for one repetition: the first 8 little-endian bytes of
/// SHA-256("{master}|{model}|{eps_ix}|{kappa_ix}|{rep}{salt}").
pub fn derive_seed(
    master: u64,
    model: ModelKind,
    eps_ix: usize,
    kappa_ix: usize,
    rep: usize,
    salt: &str,
) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(format!("{master}|{model}|{eps_ix}|{kappa_ix}|{rep}{salt}").as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Train and test sides for one repetition, already standardized when asked.
///
/// A generator repetition is ONE draw of train_samples + test_samples points
/// (one seed, hence one class-to-vertex assignment) split stratified into
/// the two sides; drawing the sides with independent seeds would re-shuffle
/// the vertex assignment and evaluate against a permuted distribution.
fn materialize_data(
    source: &DataSource,
    csv_cache: Option<&Dataset>,
    seed: u64,
    split_seed: u64,
    standardize: bool,
) -> anyhow::Result<(Dataset, Dataset)> {
    let (train, test) = match source {
        DataSource::Generator { .. } => {
            let plan = source.generator_plan(seed).expect("generator source");
            let full = generate_hypercube(&plan.spec)?;
            stratified_split(
                &full,
                &SplitSpec::Counts {
                    train: plan.train_counts,
                    test: Some(plan.test_counts),
                },
                split_seed,
            )?
        }
        DataSource::Csv { train_fraction, .. } => {
            let full = csv_cache.ok_or_else(|| anyhow!("CSV dataset not preloaded"))?;
            stratified_split(full, &SplitSpec::Fraction(*train_fraction), seed)?
        }
    };
    if standardize {
        let stats = standardize_fit(&train)?;
        Ok((
            standardize_apply(&stats, &train)?,
            standardize_apply(&stats, &test)?,
        ))
    } else {
        Ok((train, test))
    }
}

/// Extracts the score matrix and lambda from an LP solution by variable name.
pub fn lp_solution_to_linear(
    lp: &wdrmsvm::reference_solver::LpModel,
    x: &[f64],
    value: f64,
    classes: usize,
    features: usize,
) -> anyhow::Result<LinearModel> {
    let mut m = ndarray::Array2::zeros((classes, features));
    for c in 0..classes {
        for p in 0..features {
            let name = format!("M_{c}_{p}");
            let ix = lp
                .variables
                .iter()
                .position(|v| v.name == name)
                .ok_or_else(|| anyhow!("LP is missing variable {name}"))?;
            m[[c, p]] = x[ix];
        }
    }
    let lambda_ix = lp
        .variables
        .iter()
        .position(|v| v.name == "lambda")
        .ok_or_else(|| anyhow!("LP is missing variable lambda"))?;
    Ok(LinearModel {
        m,
        lambda: x[lambda_ix],
        objective: value,
    })
}

/// Fitted-model handle that can score feature rows and report its objective.
enum Fitted {
    Linear(LinearModel),
    Ova(wdrmsvm::baselines::OvaModel),
    Kernel(wdrmsvm::KernelModel),
    KernelOva(wdrmsvm::baselines::KernelOvaModel),
}

impl Fitted {
    fn predict(&self, x: ArrayView1<'_, f64>) -> wdrmsvm::Result<usize> {
        match self {
            Fitted::Linear(m) => predict(m, x),
            Fitted::Ova(m) => predict_ova(m, x),
            Fitted::Kernel(m) => predict_kernel(m, x),
            Fitted::KernelOva(m) => predict_kdr_ova(m, x),
        }
    }

    /// Training objective; per-class models report the class mean.
    fn objective(&self) -> f64 {
        match self {
            Fitted::Linear(m) => m.objective,
            Fitted::Kernel(m) => m.objective,
            Fitted::Ova(m) => m.objectives.iter().sum::<f64>() / m.objectives.len() as f64,
            Fitted::KernelOva(m) => m.objectives.iter().sum::<f64>() / m.objectives.len() as f64,
        }
    }
}

/// Trains one model on one train split. `epsilon` doubles as the
/// regularization strength for r-mlr (its grid mirrors the epsilon grid).
fn fit_one(
    model: ModelKind,
    train: &Dataset,
    epsilon: f64,
    kappa: f64,
    config: &SweepConfig,
    solver: SolverChoice,
) -> anyhow::Result<Fitted> {
    let linear_opts: SolverOptions = config.solver.apply(SolverOptions::default());
    let kernel_opts: SolverOptions = config.kernel_solver().apply(SolverOptions::default());
    let kernel_cfg = config.kernel_for(train.feature_count());

    let mut hp = Hyperparams::new(epsilon, kappa, config.cost_norm);
    hp.solver = if model.is_kernel() { kernel_opts } else { linear_opts };

    let fitted = match (model, solver) {
        (ModelKind::WdrMsvm, SolverChoice::Subgradient) => Fitted::Linear(fit(train, &hp)?.0),
        (ModelKind::WdrMsvm, SolverChoice::Simplex) => {
            let lp = build_lp(train, &hp)?;
            let (value, x) = solve_lp(&lp)?;
            Fitted::Linear(lp_solution_to_linear(
                &lp,
                &x,
                value,
                train.class_count(),
                train.feature_count(),
            )?)
        }
        (ModelKind::DrOva, SolverChoice::Subgradient) => Fitted::Ova(fit_dr_ova(train, &hp)?),
        (ModelKind::DrOva, SolverChoice::Simplex) => Fitted::Ova(fit_dr_ova_lp(train, &hp)?),
        (ModelKind::RMsvm, _) => {
            Fitted::Linear(fit_rmsvm(train, epsilon, config.cost_norm, &hp.solver)?)
        }
        (ModelKind::RMlr, _) => Fitted::Linear(fit_rmlr(train, epsilon)?.model),
        (ModelKind::KwdrMsvm, _) => Fitted::Kernel(fit_kernel(train, &hp, kernel_cfg)?),
        (ModelKind::KdrOva, _) => Fitted::KernelOva(fit_kdr_ova(train, &hp, kernel_cfg)?),
        (ModelKind::KrMsvm, _) => {
            hp.kappa = f64::INFINITY;
            Fitted::Kernel(fit_kernel(train, &hp, kernel_cfg)?)
        }
    };
    Ok(fitted)
}

/// Runs the whole sweep on a bounded pool. `threads = None` uses rayon's
/// default sizing.
pub fn run_sweep(
    config: &SweepConfig,
    solver: SolverChoice,
    threads: Option<usize>,
) -> anyhow::Result<SweepResult> {
    config.validate()?;
    if solver == SolverChoice::Simplex {
        if let Some(bad) = config
            .models
            .iter()
            .find(|m| !matches!(m, ModelKind::WdrMsvm | ModelKind::DrOva))
        {
            bail!("--solver simplex only applies to wdr-msvm and dr-ova, config lists {bad}");
        }
    }

    // CSV sources are read once and shared; generator sources draw per cell
    let csv_cache: Option<Arc<Dataset>> = match &config.data {
        DataSource::Csv { path, label_column, .. } => {
            let loaded = load_csv(path, label_column)
                .with_context(|| format!("loading {}", path.display()))?;
            if loaded.dropped_rows > 0 {
                log::warn!(
                    "{}: dropped {} rows with missing values",
                    path.display(),
                    loaded.dropped_rows
                );
            }
            Some(Arc::new(loaded.dataset))
        }
        DataSource::Generator { .. } => None,
    };

    struct Task {
        model: ModelKind,
        eps_ix: usize,
        kappa_ix: usize,
        rep: usize,
    }
    let mut tasks = Vec::new();
    for &model in &config.models {
        for eps_ix in 0..config.epsilon_grid.len() {
            for kappa_ix in 0..config.kappa_grid.len() {
                for rep in 0..config.repetitions {
                    tasks.push(Task { model, eps_ix, kappa_ix, rep });
                }
            }
        }
    }

    let run_task = |task: &Task| -> Result<Record, Failure> {
        let epsilon = config.epsilon_grid[task.eps_ix];
        let kappa = config.kappa_grid[task.kappa_ix];
        let seed = derive_seed(
            config.master_seed,
            task.model,
            task.eps_ix,
            task.kappa_ix,
            task.rep,
            "",
        );
        let split_seed = derive_seed(
            config.master_seed,
            task.model,
            task.eps_ix,
            task.kappa_ix,
            task.rep,
            "|split",
        );
        let fail = |message: String| Failure {
            model: task.model,
            epsilon,
            kappa,
            rep: task.rep,
            seed,
            message,
        };
        let (train, test) = materialize_data(
            &config.data,
            csv_cache.as_deref(),
            seed,
            split_seed,
            config.standardize,
        )
        .map_err(|e| fail(format!("{e:#}")))?;

        let started = Instant::now();
        let fitted = fit_one(task.model, &train, epsilon, kappa, config, solver)
            .map_err(|e| fail(format!("{e:#}")))?;
        let wall_ms = started.elapsed().as_millis();

        let mccr_train = mean_class_correct_rate(&train, |x| fitted.predict(x))
            .map_err(|e| fail(e.to_string()))?;
        let mccr_test = mean_class_correct_rate(&test, |x| fitted.predict(x))
            .map_err(|e| fail(e.to_string()))?;
        Ok(Record {
            model: task.model,
            epsilon,
            kappa,
            rep: task.rep,
            mccr_train,
            mccr_test,
            objective: fitted.objective(),
            seed,
            wall_ms,
        })
    };

    // task order is deterministic and collect preserves it, so scheduling
    // cannot reorder output
    let outcomes: Vec<Result<Record, Failure>> = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building worker pool")?;
            pool.install(|| tasks.par_iter().map(run_task).collect())
        }
        None => tasks.par_iter().map(run_task).collect(),
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => {
                log::warn!(
                    "cell failed: model={} eps={} kappa={} rep={}: {}",
                    f.model,
                    f.epsilon,
                    f.kappa,
                    f.rep,
                    f.message
                );
                failures.push(f);
            }
        }
    }
    if records.is_empty() {
        bail!("every sweep cell failed; first failure: {}", failures[0].message);
    }
    let aggregates = aggregate(config, &records);
    Ok(SweepResult { records, failures, aggregates })
}

/// Per-cell mean/std of test mCCR, in grid order.
pub fn aggregate(config: &SweepConfig, records: &[Record]) -> Vec<CellAggregate> {
    let mut cells = Vec::new();
    for &model in &config.models {
        for &epsilon in &config.epsilon_grid {
            for &kappa in &config.kappa_grid {
                let scores: Vec<f64> = records
                    .iter()
                    .filter(|r| {
                        r.model == model
                            && r.epsilon == epsilon
                            && (r.kappa == kappa
                                || (r.kappa.is_infinite() && kappa.is_infinite()))
                    })
                    .map(|r| r.mccr_test)
                    .collect();
                if scores.is_empty() {
                    continue;
                }
                let n = scores.len() as f64;
                let mean = scores.iter().sum::<f64>() / n;
                let std = if scores.len() > 1 {
                    (scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0))
                        .sqrt()
                } else {
                    0.0
                };
                cells.push(CellAggregate {
                    model,
                    epsilon,
                    kappa,
                    reps: scores.len(),
                    mean_mccr_test: mean,
                    std_mccr_test: std,
                });
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SweepConfig {
        serde_json::from_str(
            r#"{
            "models": ["wdr-msvm"],
            "epsilon_grid": [0.01],
            "kappa_grid": [0.5],
            "repetitions": 1,
            "data": {"source": "generator", "classes": 3, "features": 2,
                     "train_samples": 30, "test_samples": 60,
                     "class_weights": [0.34, 0.33, 0.33]},
            "solver": {"iterations": 80},
            "master_seed": 5
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn single_cell_single_rep_yields_one_record() {
        let result = run_sweep(&tiny_config(), SolverChoice::Subgradient, Some(1)).unwrap();
        assert_eq!(result.records.len(), 1);
        assert!(result.failures.is_empty());
        assert_eq!(result.aggregates.len(), 1);
        assert_eq!(result.aggregates[0].reps, 1);
        assert_eq!(result.aggregates[0].std_mccr_test, 0.0);
    }

    #[test]
    fn seeds_do_not_depend_on_other_grid_cells() {
        // the rep seed hashes indices, not grid contents, so extending the
        // grid preserves existing cells' seeds
        let a = derive_seed(7, ModelKind::WdrMsvm, 0, 0, 3, "");
        let b = derive_seed(7, ModelKind::WdrMsvm, 0, 0, 3, "");
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(7, ModelKind::WdrMsvm, 0, 0, 4, ""));
        assert_ne!(a, derive_seed(7, ModelKind::DrOva, 0, 0, 3, ""));
        assert_ne!(a, derive_seed(8, ModelKind::WdrMsvm, 0, 0, 3, ""));
        assert_ne!(a, derive_seed(7, ModelKind::WdrMsvm, 1, 0, 3, ""));
        assert_ne!(a, derive_seed(7, ModelKind::WdrMsvm, 0, 0, 3, "|test"));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut config = tiny_config();
        config.models = vec![ModelKind::WdrMsvm, ModelKind::RMlr];
        config.repetitions = 2;
        let one = run_sweep(&config, SolverChoice::Subgradient, Some(1)).unwrap();
        let four = run_sweep(&config, SolverChoice::Subgradient, Some(4)).unwrap();
        assert_eq!(one.records.len(), four.records.len());
        for (a, b) in one.records.iter().zip(four.records.iter()) {
            assert_eq!(a.model, b.model);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.mccr_test, b.mccr_test);
            assert_eq!(a.objective, b.objective);
        }
    }

    #[test]
    fn simplex_choice_rejects_models_without_an_lp_route() {
        let mut config = tiny_config();
        config.models = vec![ModelKind::KwdrMsvm];
        assert!(run_sweep(&config, SolverChoice::Simplex, Some(1)).is_err());
    }

    #[test]
    fn aggregates_recompute_from_records_exactly() {
        let mut config = tiny_config();
        config.repetitions = 3;
        let result = run_sweep(&config, SolverChoice::Subgradient, Some(2)).unwrap();
        let agg = &result.aggregates[0];
        let scores: Vec<f64> = result.records.iter().map(|r| r.mccr_test).collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (scores.len() as f64 - 1.0);
        assert!((agg.mean_mccr_test - mean).abs() <= 1e-12);
        assert!((agg.std_mccr_test - var.sqrt()).abs() <= 1e-12);
    }
}
