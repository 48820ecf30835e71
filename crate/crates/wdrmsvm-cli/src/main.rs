//! Batch CLI for the distributionally robust multiclass SVM family:
//! single fits, model evaluation, hyperparameter sweeps with CSV/SVG output,
//! LP export, the exact worst-case-risk oracle, and synthetic data generation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage errors.

mod config;
mod model_io;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use wdrmsvm::baselines::{fit_dr_ova, fit_dr_ova_lp, fit_kdr_ova};
use wdrmsvm::data::{
    generate_hypercube, load_csv, save_csv, standardize_apply, standardize_fit, stratified_split,
    FeatureStats, GeneratorSpec, SplitSpec,
};
use wdrmsvm::loss::mean_class_correct_rate;
use wdrmsvm::reference_solver::{build_lp, export_lp, solve_lp, worst_case_risk};
use wdrmsvm::{Dataset, Hyperparams, SolverOptions};

use config::{load_json, DataSource, ModelKind, SweepConfig, TrainConfig};
use model_io::{load_model, save_model, ModelFile};
use sweep::SolverChoice;

#[derive(Parser)]
#[command(
    name = "wdrmsvm",
    about = "Wasserstein distributionally robust multiclass SVM toolkit",
    version
)]
struct Cli {
    /// Worker threads (env WDRMSVM_THREADS as fallback; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Training route: iterative subgradient or the exact reference simplex.
    #[arg(long, value_enum, default_value = "subgradient")]
    solver: SolverChoice,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model from a train config and write a model JSON file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output model file path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a saved model on a CSV; prints the mean per-class correct rate.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// CSV file with the same feature columns as training.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label_column: String,
    },
    /// Run a hyperparameter sweep; writes results.csv, aggregates.csv,
    /// mccr_vs_epsilon.svg, failures.csv and a config echo to the output dir.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Overrides the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the exact epigraph LP of a training instance in LP text format.
    ExportLp {
        /// Train config describing the instance (model field is ignored).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact worst-case risk of a saved linear model on a dataset.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        /// Train config providing the data (and default epsilon/kappa).
        #[arg(long)]
        config: PathBuf,
        /// Ambiguity radius override.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Label-flip price override ("inf" accepted).
        #[arg(long, value_parser = parse_kappa)]
        kappa: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw a synthetic dataset from a generator spec and write it as CSV.
    GenData {
        /// Generator spec JSON (classes, features, samples, class_weights,
        /// class_sep, variance, seed).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_kappa(s: &str) -> Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("WDRMSVM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        // the global pool backs every parallel region outside sweep tests
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("error: configuring {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Train { config, out, solver, seed } => cmd_train(&config, &out, solver.solver, seed),
        Command::Evaluate { model, data, label_column } => {
            cmd_evaluate(&model, &data, &label_column)
        }
        Command::Sweep { config, out, solver, seed } => {
            cmd_sweep(&config, out.as_deref(), solver.solver, seed)
        }
        Command::ExportLp { config, out, seed } => cmd_export_lp(&config, &out, seed),
        Command::Oracle { model, config, epsilon, kappa, seed } => {
            cmd_oracle(&model, &config, epsilon, kappa, seed)
        }
        Command::GenData { config, out, seed } => cmd_gen_data(&config, &out, seed),
    }
}

/// Training data plus bookkeeping for one single-fit command.
struct Instance {
    train: Dataset,
    stats: Option<FeatureStats>,
    label_names: Vec<String>,
}

/// Materializes the training side described by a train config: a fresh
/// generator draw, or the seeded stratified train split of a CSV
/// (train_fraction = 1 uses the whole file).
fn instance_from(config: &TrainConfig, seed: u64) -> anyhow::Result<Instance> {
    let (train, label_names) = match &config.data {
        DataSource::Generator { .. } => {
            let spec = config.data.train_spec(seed).expect("generator source");
            let d = generate_hypercube(&spec)?;
            let names = (0..d.class_count()).map(|c| format!("c{c}")).collect();
            (d, names)
        }
        DataSource::Csv { path, label_column, train_fraction } => {
            let loaded = load_csv(path, label_column)
                .with_context(|| format!("loading {}", path.display()))?;
            if loaded.dropped_rows > 0 {
                log::warn!(
                    "{}: dropped {} rows with missing values",
                    path.display(),
                    loaded.dropped_rows
                );
            }
            let d = if *train_fraction >= 1.0 {
                loaded.dataset
            } else {
                stratified_split(&loaded.dataset, &SplitSpec::Fraction(*train_fraction), seed)?.0
            };
            (d, loaded.label_names)
        }
    };
    if config.standardize {
        let stats = standardize_fit(&train)?;
        Ok(Instance {
            train: standardize_apply(&stats, &train)?,
            stats: Some(stats),
            label_names,
        })
    } else {
        Ok(Instance { train, stats: None, label_names })
    }
}

fn cmd_train(
    config_path: &Path,
    out: &Path,
    solver: SolverChoice,
    seed: Option<u64>,
) -> anyhow::Result<()> {
    let config: TrainConfig = load_json(config_path)?;
    config.validate_for_train()?;
    let seed = seed.unwrap_or(config.seed);
    let instance = instance_from(&config, seed)?;
    let train = &instance.train;

    let opts: SolverOptions = config.solver.apply(SolverOptions::default());
    let mut hp = Hyperparams::new(config.epsilon, config.kappa, config.cost_norm);
    hp.solver = opts;
    let kernel_cfg = config
        .kernel
        .unwrap_or_else(|| wdrmsvm::KernelConfig::default_for(train.feature_count()));

    if solver == SolverChoice::Simplex
        && !matches!(config.model, ModelKind::WdrMsvm | ModelKind::DrOva)
    {
        bail!(
            "--solver simplex only applies to wdr-msvm and dr-ova, config asks for {}",
            config.model
        );
    }

    let file = match config.model {
        ModelKind::WdrMsvm => {
            let fit = match solver {
                SolverChoice::Subgradient => wdrmsvm::linear_solver::fit(train, &hp)?.0,
                SolverChoice::Simplex => {
                    let lp = build_lp(train, &hp)?;
                    let (value, x) = solve_lp(&lp)?;
                    sweep::lp_solution_to_linear(
                        &lp,
                        &x,
                        value,
                        train.class_count(),
                        train.feature_count(),
                    )?
                }
            };
            ModelFile::from_linear(
                config.model,
                &fit,
                hp,
                instance.stats.clone(),
                instance.label_names.clone(),
            )
        }
        ModelKind::DrOva => {
            let fit = match solver {
                SolverChoice::Subgradient => fit_dr_ova(train, &hp)?,
                SolverChoice::Simplex => fit_dr_ova_lp(train, &hp)?,
            };
            ModelFile::from_ova(&fit, hp, instance.stats.clone(), instance.label_names.clone())
        }
        ModelKind::RMsvm => {
            let fit = wdrmsvm::baselines::fit_rmsvm(train, config.epsilon, config.cost_norm, &hp.solver)?;
            hp.kappa = f64::INFINITY;
            ModelFile::from_linear(
                config.model,
                &fit,
                hp,
                instance.stats.clone(),
                instance.label_names.clone(),
            )
        }
        ModelKind::RMlr => {
            let fit = wdrmsvm::baselines::fit_rmlr(train, config.epsilon)?;
            ModelFile::from_rmlr(&fit, hp, instance.stats.clone(), instance.label_names.clone())
        }
        ModelKind::KwdrMsvm => {
            let fit = wdrmsvm::kernel::fit_kernel(train, &hp, kernel_cfg)?;
            ModelFile::from_kernel(
                config.model,
                &fit,
                hp,
                instance.stats.clone(),
                instance.label_names.clone(),
            )
        }
        ModelKind::KdrOva => {
            let fit = fit_kdr_ova(train, &hp, kernel_cfg)?;
            ModelFile::from_kernel_ova(&fit, hp, instance.stats.clone(), instance.label_names.clone())
        }
        ModelKind::KrMsvm => {
            hp.kappa = f64::INFINITY;
            let fit = wdrmsvm::kernel::fit_kernel(train, &hp, kernel_cfg)?;
            ModelFile::from_kernel(
                config.model,
                &fit,
                hp,
                instance.stats.clone(),
                instance.label_names.clone(),
            )
        }
    };

    let train_mccr = mean_class_correct_rate(train, |x| {
        file.predict(x).map_err(|e| wdrmsvm::Error::InvalidInput(e.to_string()))
    })?;
    save_model(&file, out)?;
    println!(
        "wrote {} model to {} (objective {}, train mCCR {:.4})",
        config.model,
        out.display(),
        file.objective(),
        train_mccr
    );
    Ok(())
}

fn cmd_evaluate(model_path: &Path, data: &Path, label_column: &str) -> anyhow::Result<()> {
    let model = load_model(model_path)?;
    let loaded = load_csv(data, label_column)
        .with_context(|| format!("loading {}", data.display()))?;
    let eval = match &model.standardizer {
        Some(stats) => standardize_apply(stats, &loaded.dataset)?,
        None => loaded.dataset,
    };

    // evaluation label indices follow first appearance in the eval file;
    // translate them into the model's training-time class indices
    let translate: Vec<usize> = loaded
        .label_names
        .iter()
        .map(|name| {
            model
                .label_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| anyhow!("label \"{name}\" was not seen at training time"))
        })
        .collect::<anyhow::Result<_>>()?;

    let classes = model.label_names.len();
    let mut hit = vec![0usize; classes];
    let mut cnt = vec![0usize; classes];
    for s in 0..eval.sample_count() {
        let truth = translate[eval.label_class(s)];
        cnt[truth] += 1;
        if model.predict(eval.feature_row(s))? == truth {
            hit[truth] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..classes {
        if cnt[c] > 0 {
            sum += hit[c] as f64 / cnt[c] as f64;
            present += 1;
        }
    }
    if present == 0 {
        bail!("evaluation file {} has no samples", data.display());
    }
    println!("{}", sum / present as f64);
    Ok(())
}

fn cmd_sweep(
    config_path: &Path,
    out: Option<&Path>,
    solver: SolverChoice,
    seed: Option<u64>,
) -> anyhow::Result<()> {
    let mut config: SweepConfig = load_json(config_path)?;
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let out_dir: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set output_dir"))?;
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    // threads: the global pool was already sized in main(); None here reuses it
    let result = sweep::run_sweep(&config, solver, None)?;

    output::emit_csv(&result, &out_dir.join("results.csv"))?;
    output::emit_aggregates_csv(&result, &out_dir.join("aggregates.csv"))?;
    output::emit_svg(&result, &out_dir.join("mccr_vs_epsilon.svg"))?;
    if !result.failures.is_empty() {
        output::emit_failures_csv(&result.failures, &out_dir.join("failures.csv"))?;
    }
    // echo the resolved config (seed overrides applied, standardize flag
    // explicit) so the output directory is self-describing
    std::fs::write(
        out_dir.join("config.json"),
        serde_json::to_string_pretty(&config)?,
    )?;

    for &model in &config.models {
        if let Some(best) = result
            .aggregates
            .iter()
            .filter(|a| a.model == model)
            .reduce(|best, c| if c.mean_mccr_test > best.mean_mccr_test { c } else { best })
        {
            println!(
                "{model}: peak mean test mCCR {:.4} (std {:.4}) at epsilon={} kappa={}",
                best.mean_mccr_test, best.std_mccr_test, best.epsilon, best.kappa
            );
        }
    }
    println!(
        "{} records, {} failures -> {}",
        result.records.len(),
        result.failures.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_export_lp(config_path: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let config: TrainConfig = load_json(config_path)?;
    config.validate_for_train()?;
    let seed = seed.unwrap_or(config.seed);
    let instance = instance_from(&config, seed)?;
    let mut hp = Hyperparams::new(config.epsilon, config.kappa, config.cost_norm);
    hp.solver = config.solver.apply(SolverOptions::default());
    let lp = build_lp(&instance.train, &hp)?;
    export_lp(&lp, out)?;
    println!(
        "wrote LP with {} variables, {} rows to {}",
        lp.variables.len(),
        lp.rows.len(),
        out.display()
    );
    Ok(())
}

fn cmd_oracle(
    model_path: &Path,
    config_path: &Path,
    epsilon: Option<f64>,
    kappa: Option<f64>,
    seed: Option<u64>,
) -> anyhow::Result<()> {
    let model = load_model(model_path)?;
    let m = model.linear_m().ok_or_else(|| {
        anyhow!(
            "worst-case risk needs a linear score matrix; {} models have none",
            model.model
        )
    })?;
    let config: TrainConfig = load_json(config_path)?;
    config.validate_for_train()?;
    let seed = seed.unwrap_or(config.seed);

    // the data must be transformed exactly as at training time, so the
    // model's stored standardizer wins over the config flag
    let raw = TrainConfig { standardize: false, ..config.clone() };
    let instance = instance_from(&raw, seed)?;
    let data = match &model.standardizer {
        Some(stats) => standardize_apply(stats, &instance.train)?,
        None => instance.train,
    };

    let eps = epsilon.unwrap_or(model.hyperparams.epsilon);
    let kap = kappa.unwrap_or(model.hyperparams.kappa);
    let risk = worst_case_risk(m, &data, eps, kap, model.hyperparams.cost_norm)?;
    println!("{risk}");
    Ok(())
}

fn cmd_gen_data(config_path: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let mut spec: GeneratorSpec = load_json(config_path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let dataset = generate_hypercube(&spec)?;
    save_csv(&dataset, out, None)?;
    println!(
        "wrote {} samples ({} features, {} classes) to {}",
        dataset.sample_count(),
        dataset.feature_count(),
        dataset.class_count(),
        out.display()
    );
    Ok(())
}
