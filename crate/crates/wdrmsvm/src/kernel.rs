//! Kernelized upper-bound model: Gram construction, the kernel-space
//! objective, a subgradient trainer, and prediction in coefficient space.
//!
//! The kernel training problem replaces the linear scores `M x_n` with
//! `(A K)_{., n}` for a coefficient matrix A (C rows, one per class, N
//! columns) and charges the robustness budget through the feasibility
//! constraint `lambda >= 2 * max_r ||h_r||`, where `||h_r|| = sqrt(A_r K
//! A_r^T)` is the RKHS norm of class r's score function (the pairwise
//! Lipschitz terms are bounded by the triangle inequality, which is what
//! makes this an upper bound rather than an exact reformulation). No matrix
//! square root is ever formed: every kernel-space norm reduces to the
//! quadratic form `a^T K a`.
//!
//! The trainer minimizes over lambda analytically each step (the exact
//! minimizer of the piecewise-linear 1-D problem over the feasible ray
//! `lambda >= 2 max_r ||h_r||`), so the iterate is feasible by construction
//! and the exact-penalty term `rho * max(0, 2 max_r ||h_r|| - lambda)` is
//! identically zero: for any rho > eps both methods minimize the same
//! function, and the analytic route cannot stall on a lagging lambda. When
//! the floor binds, the M-subgradient carries the residual lambda-slope
//! through `2 * d||h_r*||/dA` (the constraint's own A-dependence), which is
//! exactly the regularizer gradient of the kappa = inf limit.

use ndarray::{Array1, Array2, ArrayView1};

use crate::core::{Dataset, Hyperparams, KernelConfig, KernelModel};
use crate::error::Error;
use crate::linear_solver::kink_blend;
use crate::Result;

/// A training-set kernel matrix with the config that produced it.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub k: Array2<f64>,
    pub config: KernelConfig,
}

/// Kernel evaluation between two feature vectors.
fn kernel_eval(config: KernelConfig, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    match config {
        KernelConfig::Linear => a.dot(&b),
        KernelConfig::Rbf { gamma } => {
            let sq: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum();
            (-gamma * sq).exp()
        }
    }
}

/// Builds the N x N Gram matrix K_ij = k(x_i, x_j). The upper triangle is
/// computed once and mirrored, so symmetry is exact.
pub fn gram(features: &Array2<f64>, config: KernelConfig) -> Result<GramMatrix> {
    if let Some(v) = features.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite feature value {v}")));
    }
    if let KernelConfig::Rbf { gamma } = config {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "RBF gamma must be a positive real, got {gamma}"
            )));
        }
    }
    let n = features.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = kernel_eval(config, features.row(i), features.row(j));
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(GramMatrix { k, config })
}

/// RKHS norm of the score function with coefficient row `a_row`:
/// sqrt(max(0, a K a^T)). The max clamps round-off on a PSD form.
pub fn h_norm(a_row: ArrayView1<'_, f64>, gram: &GramMatrix) -> f64 {
    let ka = gram.k.dot(&a_row);
    a_row.dot(&ka).max(0.0).sqrt()
}

/// Feasibility floor of the kernel problem: 2 * max_r ||h_r||.
fn pair_norm_floor(a: &Array2<f64>, gram: &GramMatrix) -> f64 {
    (0..a.nrows())
        .map(|r| h_norm(a.row(r), gram))
        .fold(0.0f64, f64::max)
        * 2.0
}

/// Per-sample (nominal, uncharged flip) branch maxima of the kernel scores
/// `(A K)_{., n}`, on the raw scale (1 below the CS scale).
fn kernel_branches(scores: &Array2<f64>, dataset: &Dataset) -> Vec<(f64, f64)> {
    let c = dataset.class_count();
    (0..dataset.sample_count())
        .map(|n| {
            let truth = dataset.label_class(n);
            let mut nominal = f64::NEG_INFINITY;
            let mut flip = f64::NEG_INFINITY;
            for y in 0..c {
                let mut inner = f64::NEG_INFINITY;
                for v in 0..c {
                    inner = inner.max(scores[[v, n]] - if v == y { 1.0 } else { 0.0 });
                }
                let raw = inner - scores[[y, n]];
                if y == truth {
                    nominal = raw;
                } else {
                    flip = flip.max(raw);
                }
            }
            (nominal, flip)
        })
        .collect()
}

fn check_kernel_shapes(a: &Array2<f64>, dataset: &Dataset, gram: &GramMatrix) -> Result<()> {
    let n = dataset.sample_count();
    if gram.k.nrows() != n || gram.k.ncols() != n {
        return Err(Error::Dimension(format!(
            "Gram is {}x{} but dataset has {n} samples",
            gram.k.nrows(),
            gram.k.ncols()
        )));
    }
    if a.nrows() != dataset.class_count() || a.ncols() != n {
        return Err(Error::Dimension(format!(
            "A is {}x{} but needs {} classes x {n} samples",
            a.nrows(),
            a.ncols(),
            dataset.class_count()
        )));
    }
    Ok(())
}

/// Exact kernel objective lambda*eps + (1/N) sum_n s_n, with s_n the CS-scale
/// inner maximum over all (v, y) branches (flips charged lambda*kappa).
/// Requires the feasibility certificate lambda >= 2 max_r ||h_r|| - 1e-9.
pub fn kernel_objective(
    a: &Array2<f64>,
    lambda: f64,
    dataset: &Dataset,
    gram: &GramMatrix,
    eps: f64,
    kappa: f64,
) -> Result<f64> {
    check_kernel_shapes(a, dataset, gram)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "epsilon must be finite and nonnegative, got {eps}"
        )));
    }
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::InvalidInput(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    let floor = pair_norm_floor(a, gram);
    if lambda < floor - 1e-9 {
        return Err(Error::Infeasible(format!(
            "lambda = {lambda} is below the pair-norm bound {floor} by {}",
            floor - lambda
        )));
    }
    let scores = a.dot(&gram.k);
    let branches = kernel_branches(&scores, dataset);
    let mean: f64 = branches
        .iter()
        .map(|&(nom, flip)| {
            if kappa.is_infinite() {
                nom
            } else {
                nom.max(flip - lambda * kappa)
            }
        })
        .sum::<f64>()
        / dataset.sample_count() as f64;
    Ok(lambda * eps + mean + 1.0)
}

/// Trains the kernel model by projected subgradient on the coefficient
/// matrix A with lambda eliminated analytically each step (see module docs).
/// `kappa = inf` drops the flip branches, the regularized limit. Returns the
/// best iterate by objective; the start point A = 0 is a candidate.
pub fn fit_kernel(
    dataset: &Dataset,
    hp: &Hyperparams,
    kernel: KernelConfig,
) -> Result<KernelModel> {
    hp.validate()?;
    let gram_m = gram(dataset.features(), kernel)?;
    let n_samples = dataset.sample_count();
    let n = n_samples as f64;
    let c = dataset.class_count();
    let (eps, kappa) = (hp.epsilon, hp.kappa);

    let mut a = Array2::zeros((c, n_samples));
    let mut lambda = 0.0f64;
    let mut best_a = a.clone();
    let mut best_lambda = lambda;
    let mut best_obj = kernel_objective(&a, lambda, dataset, &gram_m, eps, kappa)?;

    // steps live in coefficient space, where the objective's curvature scales
    // with the Gram magnitude; dividing by the mean diagonal k(x, x) makes
    // the schedule invariant to kernel scaling (it is exactly 1 for RBF)
    let step_scale = (gram_m.k.diag().sum() / n).max(1e-12);

    for t in 1..=hp.solver.iterations {
        let sigma = hp.solver.initial_step / (t as f64 * step_scale);

        // classify every sample's branch at the current lambda
        let scores = a.dot(&gram_m.k);
        let mut strict_flips: Vec<(usize, (usize, usize))> = Vec::new();
        let mut nominals: Vec<(usize, (usize, usize))> = Vec::new();
        let mut ties: Vec<(usize, (usize, usize), (usize, usize))> = Vec::new();
        for smp in 0..n_samples {
            let truth = dataset.label_class(smp);
            let mut nom_val = f64::NEG_INFINITY;
            let mut nom_pair = (0usize, truth);
            for v in 0..c {
                let raw = scores[[v, smp]] - if v == truth { 1.0 } else { 0.0 } - scores[[truth, smp]];
                if raw > nom_val {
                    nom_val = raw;
                    nom_pair = (v, truth);
                }
            }
            if kappa.is_infinite() {
                nominals.push((smp, nom_pair));
                continue;
            }
            let mut flip_val = f64::NEG_INFINITY;
            let mut flip_pair = (0usize, 0usize);
            for v in 0..c {
                for y in 0..c {
                    if y == truth {
                        continue;
                    }
                    let raw = scores[[v, smp]] - if v == y { 1.0 } else { 0.0 } - scores[[y, smp]];
                    let val = raw - lambda * kappa;
                    if val > flip_val {
                        flip_val = val;
                        flip_pair = (v, y);
                    }
                }
            }
            let tol = 1e-9 * (1.0 + nom_val.abs() + flip_val.abs());
            if flip_val > nom_val + tol {
                strict_flips.push((smp, flip_pair));
            } else if flip_val < nom_val - tol {
                nominals.push((smp, nom_pair));
            } else {
                ties.push((smp, nom_pair, flip_pair));
            }
        }
        let (theta, slope) = kink_blend(eps, kappa, n, strict_flips.len(), ties.len());
        let residual = slope.max(0.0);

        // branch subgradients taken in the RKHS metric: a chosen pair (v, y)
        // at sample n moves the class-v score function along k(x_n, .) and
        // the class-y one oppositely, which in the representer basis is a
        // direct update of coefficient column n. Descending in the function
        // norm rather than the raw coefficient norm keeps the step size
        // meaningful for any kernel scaling (coefficient-space steps act on
        // the scores through K twice and blow up for large Gram entries).
        let mut grad = Array2::zeros((c, n_samples));
        {
            let mut add = |smp: usize, pair: (usize, usize), w: f64| {
                let (v, y) = pair;
                if v == y || w == 0.0 {
                    return;
                }
                grad[[v, smp]] += w / n;
                grad[[y, smp]] -= w / n;
            };
            for &(smp, pair) in &nominals {
                add(smp, pair, 1.0);
            }
            for &(smp, pair) in &strict_flips {
                add(smp, pair, 1.0);
            }
            for &(smp, nom, flip) in &ties {
                add(smp, flip, theta);
                add(smp, nom, 1.0 - theta);
            }
        }

        // when the feasibility floor binds, the residual lambda-slope loads
        // onto the floor's own A-dependence: the RKHS gradient of 2*||h_r*||
        // is 2 h_r* / ||h_r*||, whose coefficients are 2 a_r* / ||h_r*||
        let floor = pair_norm_floor(&a, &gram_m);
        if residual > 0.0 && lambda <= floor + 1e-9 * (1.0 + floor) {
            let (r_star, h_star) = (0..c)
                .map(|r| (r, h_norm(a.row(r), &gram_m)))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .expect("at least one class row");
            if h_star > 0.0 {
                let scale = 2.0 * residual / h_star;
                for j in 0..n_samples {
                    grad[[r_star, j]] += scale * a[[r_star, j]];
                }
            }
        }

        a = &a - &(sigma * &grad);

        // exact partial minimization in lambda over the feasible ray
        let scores = a.dot(&gram_m.k);
        let branches = kernel_branches(&scores, dataset);
        let new_floor = pair_norm_floor(&a, &gram_m);
        let (l_best, raw_val) =
            crate::linear_solver::min_over_lambda(&branches, eps, kappa, new_floor);
        lambda = l_best;

        let obj = raw_val + 1.0;
        if std::env::var_os("WDRMSVM_KERNEL_TRACE").is_some() {
            eprintln!(
                "t={t} sigma={sigma:.3e} obj={obj:.6} lambda={lambda:.4} floor={new_floor:.4} \
                 strict={} ties={} theta={theta:.3} |g|={:.3e}",
                strict_flips.len(),
                ties.len(),
                grad.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
            );
        }
        if obj < best_obj {
            best_obj = obj;
            best_lambda = lambda;
            best_a = a.clone();
        }
    }

    Ok(KernelModel {
        a: best_a,
        train_features: dataset.features().clone(),
        kernel,
        lambda: best_lambda,
        objective: best_obj,
    })
}

/// Predicted class of `x`: argmax_c sum_n A_{c,n} k(x, x_n), ties to the
/// lowest class index.
pub fn predict_kernel(model: &KernelModel, x: ArrayView1<'_, f64>) -> Result<usize> {
    if x.len() != model.train_features.ncols() {
        return Err(Error::Dimension(format!(
            "x has {} features, model was trained on {}",
            x.len(),
            model.train_features.ncols()
        )));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite input value {v}")));
    }
    let n = model.train_features.nrows();
    let mut kx = Array1::zeros(n);
    for j in 0..n {
        kx[j] = kernel_eval(model.kernel, x, model.train_features.row(j));
    }
    let scores = model.a.dot(&kx);
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Training error of a kernel model on its own training set.
pub fn kernel_empirical_error(model: &KernelModel, dataset: &Dataset) -> Result<f64> {
    let mut wrong = 0usize;
    for s in 0..dataset.sample_count() {
        if predict_kernel(model, dataset.feature_row(s))? != dataset.label_class(s) {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / dataset.sample_count() as f64)
}
