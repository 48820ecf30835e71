//! Comparator models: the distributionally robust one-vs-all hinge SVM (with
//! both an exact per-class LP route and a per-class subgradient route), the
//! regularized multiclass SVM (a thin alias of the robust trainer's
//! kappa = inf limit), regularized multinomial logistic regression, and a
//! kernelized one-vs-all variant so every linear comparator has a kernel
//! counterpart.
//!
//! The one-vs-all program for class c with binary labels z_n = +-1 is
//!
//! ```text
//! min_{w, lambda}  lambda*eps + (1/N) sum_n s_n
//! s.t.             s_n >= 1 - z_n w.x_n
//!                  s_n >= 1 + z_n w.x_n - lambda*kappa   (absent at kappa = inf)
//!                  s_n >= 0
//!                  lambda >= ||w||_*                      (dual of the cost norm)
//! ```
//!
//! and prediction aggregates by argmax_c w_c.x (lowest index on ties). No
//! model here carries a bias term, matching the multiclass formulation.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::core::{Dataset, Hyperparams, KernelConfig, LinearModel, SolverOptions};
use crate::error::Error;
use crate::kernel::{gram, h_norm, GramMatrix};
use crate::linear_solver::{fit_regularized, kink_blend, min_over_lambda};
use crate::loss::{dual_norm, NormKind};
use crate::reference_solver::{solve_lp, LpModel, Row, Sense, Variable};
use crate::Result;

/// One-vs-all ensemble: row c of `w` separates class c from the rest.
#[derive(Debug, Clone)]
pub struct OvaModel {
    pub w: Array2<f64>,
    /// Per-class robustness multipliers; each satisfies
    /// `lambda[c] >= dual_norm(w.row(c)) - 1e-6`.
    pub lambda: Array1<f64>,
    /// Per-class optimal objective values.
    pub objectives: Array1<f64>,
}

/// Kernelized one-vs-all ensemble: row c of `a` holds the representer
/// coefficients of class c's score function.
#[derive(Debug, Clone)]
pub struct KernelOvaModel {
    pub a: Array2<f64>,
    pub train_features: Array2<f64>,
    pub kernel: KernelConfig,
    pub lambda: Array1<f64>,
    pub objectives: Array1<f64>,
}

/// Regularized multinomial logistic regression fit: the weights in
/// [`LinearModel`] shape plus the terminal optimizer state.
#[derive(Debug, Clone)]
pub struct RmlrFit {
    pub model: LinearModel,
    /// Frobenius norm of the gradient at the returned weights.
    pub grad_norm: f64,
    /// Gradient steps actually taken (2000 means the cap was hit).
    pub iterations_run: usize,
}

/// Euclidean projection of (v, b) onto the epigraph {(x, t): ||x||_1 <= t}.
/// Used when the transport cost norm is L-infinity, whose dual is L1.
pub fn project_l1_epigraph(v: ArrayView1<'_, f64>, b: f64) -> (Array1<f64>, f64) {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= b {
        return (v.to_owned(), b);
    }
    // active case: x = soft(v, mu), t = b + mu with mu > 0 solving
    // phi(mu) = sum_i max(|v_i| - mu, 0) - mu - b = 0. phi is piecewise
    // linear and strictly decreasing with phi(0) = ||v||_1 - b > 0, so
    // exactly one magnitude segment holds the root: on the segment where
    // `active` entries still exceed mu, phi(mu) = suffix - (active + 1) mu - b
    // with suffix the sum of those entries.
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = mags.len();
    let mut suffix = l1;
    let mut mu = -b; // fallback: every coordinate zeroed, t = 0
    for k in 0..=n {
        let active = (n - k) as f64;
        let candidate = (suffix - b) / (active + 1.0);
        // while phi is still positive at a segment's top, the segment line
        // crosses zero beyond it, so the first in-segment candidate is the root
        let seg_hi = if k < n { mags[k] } else { f64::INFINITY };
        if candidate <= seg_hi {
            mu = candidate.max(0.0);
            break;
        }
        suffix -= mags[k];
    }
    let x = v.mapv(|x| x.signum() * (x.abs() - mu).max(0.0));
    (x, (b + mu).max(0.0))
}

/// Euclidean projection of (v, b) onto the epigraph {(x, t): ||x||_inf <= t}.
/// Used when the transport cost norm is L1, whose dual is L-infinity.
pub fn project_linf_epigraph(v: ArrayView1<'_, f64>, b: f64) -> (Array1<f64>, f64) {
    let linf = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if linf <= b {
        return (v.to_owned(), b);
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= -b {
        // (v, b) lies in the polar cone: the apex is the nearest point
        return (Array1::zeros(v.len()), 0.0);
    }
    // x = clamp(v, +-t), t > 0 solving
    // psi(t) = t - b - sum_i max(|v_i| - t, 0) = 0. psi is piecewise linear
    // and strictly increasing with psi(0) = -b - ||v||_1 < 0, so scan the
    // magnitude segments: where `above` entries exceed t,
    // psi(t) = (above + 1) t - suffix - b with suffix the sum of those entries.
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = mags.len();
    let mut suffix = l1;
    let mut t = b.max(0.0); // unreachable fallback
    for k in 0..=n {
        let above = (n - k) as f64;
        let candidate = (suffix + b) / (above + 1.0);
        // while psi is still negative at a segment's top, the segment line
        // crosses zero beyond it, so the first in-segment candidate is the root
        let seg_hi = if k < n { mags[k] } else { f64::INFINITY };
        if candidate <= seg_hi {
            t = candidate.max(0.0);
            break;
        }
        suffix -= mags[k];
    }
    let x = v.mapv(|x| x.clamp(-t, t));
    (x, t)
}

/// Projection onto {(w, lambda): dual_norm(w) <= lambda} for the given
/// transport cost norm.
fn project_dual_epigraph(
    v: ArrayView1<'_, f64>,
    b: f64,
    cost_norm: NormKind,
) -> (Array1<f64>, f64) {
    match cost_norm {
        NormKind::LInf => project_l1_epigraph(v, b),
        NormKind::L1 => project_linf_epigraph(v, b),
    }
}

/// Per-sample (nominal, uncharged flip) branch values of the binary hinge:
/// nominal max(0, 1 - z w.x), flip 1 + z w.x (charged -lambda*kappa later).
fn ova_branches(scores: &[f64]) -> Vec<(f64, f64)> {
    scores
        .iter()
        .map(|&zwx| ((1.0 - zwx).max(0.0), 1.0 + zwx))
        .collect()
}

/// Subgradient route for one binary class problem. Mirrors the multiclass
/// trainer: step (w, lambda), project onto the dual-norm epigraph, then
/// minimize exactly over lambda; subgradients at the lambda-kink blend the
/// tied branches so descent acts on the reduced objective.
fn fit_ova_class(
    features: &Array2<f64>,
    z: &[f64],
    hp: &Hyperparams,
) -> (Array1<f64>, f64, f64) {
    let n_samples = features.nrows();
    let n = n_samples as f64;
    let p = features.ncols();
    let (eps, kappa, cost_norm) = (hp.epsilon, hp.kappa, hp.cost_norm);

    let mut w = Array1::zeros(p);
    // start point: all-zero w gives branches (1, 1) for every sample
    let start = min_over_lambda(&vec![(1.0, 1.0); n_samples], eps, kappa, 0.0);
    let mut lambda = start.0;
    let mut best_w = w.clone();
    let mut best_lambda = start.0;
    let mut best_obj = start.1;

    for t in 1..=hp.solver.iterations {
        let sigma = hp.solver.initial_step / t as f64;

        // classify branches at the current (lambda, w)
        let mut strict_flips: Vec<usize> = Vec::new();
        let mut nominals: Vec<usize> = Vec::new();
        let mut ties: Vec<usize> = Vec::new();
        let mut scores = vec![0.0f64; n_samples];
        for smp in 0..n_samples {
            let zwx = z[smp] * features.row(smp).dot(&w);
            scores[smp] = zwx;
            let nom = (1.0 - zwx).max(0.0);
            if kappa.is_infinite() {
                nominals.push(smp);
                continue;
            }
            let flip = 1.0 + zwx - lambda * kappa;
            let tol = 1e-9 * (1.0 + nom.abs() + flip.abs());
            if flip > nom + tol {
                strict_flips.push(smp);
            } else if flip < nom - tol {
                nominals.push(smp);
            } else {
                ties.push(smp);
            }
        }
        let (theta, slope) = kink_blend(eps, kappa, n, strict_flips.len(), ties.len());

        let mut grad = Array1::zeros(p);
        {
            // nominal branch max(0, 1 - z w.x) subgradient -z x when the
            // hinge is active; flip branch 1 + z w.x has gradient +z x
            let mut add = |smp: usize, flip_weight: f64| {
                let x = features.row(smp);
                let zwx = scores[smp];
                let mut coef = 0.0;
                coef += flip_weight;
                if zwx < 1.0 {
                    coef -= 1.0 - flip_weight;
                }
                if coef != 0.0 {
                    let s = coef * z[smp] / n;
                    for (j, &xj) in x.iter().enumerate() {
                        grad[j] += s * xj;
                    }
                }
            };
            for &smp in &nominals {
                add(smp, 0.0);
            }
            for &smp in &strict_flips {
                add(smp, 1.0);
            }
            for &smp in &ties {
                add(smp, theta);
            }
        }

        let w_step = &w - &(sigma * &grad);
        let lambda_step = lambda - sigma * slope;
        let (w_proj, _) = project_dual_epigraph(w_step.view(), lambda_step, cost_norm);

        let mut scores = vec![0.0f64; n_samples];
        for smp in 0..n_samples {
            scores[smp] = z[smp] * features.row(smp).dot(&w_proj);
        }
        let branches = ova_branches(&scores);
        let floor = dual_norm(w_proj.view(), cost_norm);
        let (l_best, obj) = min_over_lambda(&branches, eps, kappa, floor);
        lambda = l_best;
        w = w_proj;

        if obj < best_obj {
            best_obj = obj;
            best_lambda = lambda;
            best_w = w.clone();
        }
    }
    (best_w, best_lambda, best_obj)
}

fn binary_labels(dataset: &Dataset, class: usize) -> Vec<f64> {
    (0..dataset.sample_count())
        .map(|s| if dataset.label_class(s) == class { 1.0 } else { -1.0 })
        .collect()
}

/// Trains the distributionally robust one-vs-all ensemble by per-class
/// subgradient descent. The C binary problems are independent and run in
/// parallel; results are merged by class index, so the output is
/// deterministic for fixed inputs.
pub fn fit_dr_ova(dataset: &Dataset, hp: &Hyperparams) -> Result<OvaModel> {
    hp.validate()?;
    let c = dataset.class_count();
    let p = dataset.feature_count();
    let per_class: Vec<(Array1<f64>, f64, f64)> = (0..c)
        .into_par_iter()
        .map(|cl| fit_ova_class(dataset.features(), &binary_labels(dataset, cl), hp))
        .collect();

    let mut w = Array2::zeros((c, p));
    let mut lambda = Array1::zeros(c);
    let mut objectives = Array1::zeros(c);
    for (cl, (wc, lc, oc)) in per_class.into_iter().enumerate() {
        w.row_mut(cl).assign(&wc);
        lambda[cl] = lc;
        objectives[cl] = oc;
    }
    Ok(OvaModel { w, lambda, objectives })
}

/// Builds the exact per-class LP (see module docs for the program).
fn build_ova_lp(features: &Array2<f64>, z: &[f64], hp: &Hyperparams) -> LpModel {
    let n = features.nrows();
    let p = features.ncols();
    let (eps, kappa, cost_norm) = (hp.epsilon, hp.kappa, hp.cost_norm);

    let mut variables = Vec::new();
    for j in 0..p {
        variables.push(Variable { name: format!("w_{j}"), lower: None, upper: None });
    }
    let lambda_ix = variables.len();
    variables.push(Variable { name: "lambda".into(), lower: Some(0.0), upper: None });
    let s_base = variables.len();
    for smp in 0..n {
        variables.push(Variable { name: format!("s_{smp}"), lower: Some(0.0), upper: None });
    }
    // L-infinity cost norm needs |w_j| majorants t_j to express ||w||_1
    let t_base = variables.len();
    if cost_norm == NormKind::LInf {
        for j in 0..p {
            variables.push(Variable { name: format!("t_{j}"), lower: Some(0.0), upper: None });
        }
    }

    let mut objective = vec![0.0; variables.len()];
    objective[lambda_ix] = eps;
    for smp in 0..n {
        objective[s_base + smp] = 1.0 / n as f64;
    }

    let mut rows = Vec::new();
    for smp in 0..n {
        // s >= 1 - z w.x  <=>  -z w.x - s <= -1
        let mut coeffs: Vec<(usize, f64)> = (0..p)
            .map(|j| (j, -z[smp] * features[[smp, j]]))
            .collect();
        coeffs.push((s_base + smp, -1.0));
        rows.push(Row { coeffs, sense: Sense::Le, rhs: -1.0 });
        // s >= 1 + z w.x - lambda*kappa  <=>  z w.x - kappa*lambda - s <= -1
        if kappa.is_finite() {
            let mut coeffs: Vec<(usize, f64)> = (0..p)
                .map(|j| (j, z[smp] * features[[smp, j]]))
                .collect();
            coeffs.push((lambda_ix, -kappa));
            coeffs.push((s_base + smp, -1.0));
            rows.push(Row { coeffs, sense: Sense::Le, rhs: -1.0 });
        }
    }
    match cost_norm {
        NormKind::LInf => {
            for j in 0..p {
                rows.push(Row {
                    coeffs: vec![(j, 1.0), (t_base + j, -1.0)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                rows.push(Row {
                    coeffs: vec![(j, -1.0), (t_base + j, -1.0)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
            }
            let mut coeffs: Vec<(usize, f64)> = (0..p).map(|j| (t_base + j, 1.0)).collect();
            coeffs.push((lambda_ix, -1.0));
            rows.push(Row { coeffs, sense: Sense::Le, rhs: 0.0 });
        }
        NormKind::L1 => {
            for j in 0..p {
                rows.push(Row {
                    coeffs: vec![(j, 1.0), (lambda_ix, -1.0)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                rows.push(Row {
                    coeffs: vec![(j, -1.0), (lambda_ix, -1.0)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
            }
        }
    }
    LpModel { variables, objective, rows }
}

/// Trains the one-vs-all ensemble by solving each class's LP exactly with
/// the reference simplex. Desk-scale only.
pub fn fit_dr_ova_lp(dataset: &Dataset, hp: &Hyperparams) -> Result<OvaModel> {
    hp.validate()?;
    let c = dataset.class_count();
    let p = dataset.feature_count();
    let per_class: Vec<Result<(Vec<f64>, f64)>> = (0..c)
        .into_par_iter()
        .map(|cl| {
            let z = binary_labels(dataset, cl);
            let lp = build_ova_lp(dataset.features(), &z, hp);
            let (value, x) = solve_lp(&lp)?;
            Ok((x, value))
        })
        .collect();

    let mut w = Array2::zeros((c, p));
    let mut lambda = Array1::zeros(c);
    let mut objectives = Array1::zeros(c);
    for (cl, res) in per_class.into_iter().enumerate() {
        let (x, value) = res?;
        for j in 0..p {
            w[[cl, j]] = x[j];
        }
        lambda[cl] = x[p];
        objectives[cl] = value;
    }
    Ok(OvaModel { w, lambda, objectives })
}

/// Predicted class: argmax_c w_c.x with ties to the lowest class index.
pub fn predict_ova(model: &OvaModel, x: ArrayView1<'_, f64>) -> Result<usize> {
    if x.len() != model.w.ncols() {
        return Err(Error::Dimension(format!(
            "x has {} features, model was trained on {}",
            x.len(),
            model.w.ncols()
        )));
    }
    let scores = model.w.dot(&x);
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Training error of a one-vs-all model on a dataset.
pub fn ova_empirical_error(model: &OvaModel, dataset: &Dataset) -> Result<f64> {
    let mut wrong = 0usize;
    for s in 0..dataset.sample_count() {
        if predict_ova(model, dataset.feature_row(s))? != dataset.label_class(s) {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / dataset.sample_count() as f64)
}

/// Regularized multiclass SVM: the robust trainer's kappa = inf limit, kept
/// as a named comparator. Identical to [`fit_regularized`] by construction.
pub fn fit_rmsvm(
    dataset: &Dataset,
    eps: f64,
    cost_norm: NormKind,
    opts: &SolverOptions,
) -> Result<LinearModel> {
    fit_regularized(dataset, eps, cost_norm, opts)
}

/// Softmax cross-entropy with squared-Frobenius penalty: objective value and
/// gradient at `w` (C x P).
pub(crate) fn rmlr_objective_grad(
    w: &Array2<f64>,
    dataset: &Dataset,
    reg: f64,
) -> (f64, Array2<f64>) {
    let n = dataset.sample_count();
    let scores = dataset.features().dot(&w.t()); // N x C
    let mut loss = 0.0;
    let mut grad = w * (2.0 * reg);
    for smp in 0..n {
        let row = scores.row(smp);
        let truth = dataset.label_class(smp);
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum_exp: f64 = row.iter().map(|&s| (s - max).exp()).sum();
        loss += max + sum_exp.ln() - row[truth];
        let x = dataset.feature_row(smp);
        for c in 0..w.nrows() {
            let p = (row[c] - max).exp() / sum_exp;
            let coef = (p - if c == truth { 1.0 } else { 0.0 }) / n as f64;
            if coef != 0.0 {
                for (j, &xj) in x.iter().enumerate() {
                    grad[[c, j]] += coef * xj;
                }
            }
        }
    }
    loss /= n as f64;
    loss += reg * w.iter().map(|v| v * v).sum::<f64>();
    (loss, grad)
}

/// Regularized multinomial logistic regression by full-batch gradient
/// descent with a fixed step from the smoothness bound, at most 2000
/// iterations, stopping early when the gradient's Frobenius norm falls to
/// 1e-4. The returned weights live in [`LinearModel`] shape (lambda is not
/// meaningful for this model and is set to 0).
pub fn fit_rmlr(dataset: &Dataset, reg_strength: f64) -> Result<RmlrFit> {
    if !(reg_strength >= 0.0) || !reg_strength.is_finite() {
        return Err(Error::InvalidInput(format!(
            "regularization strength must be finite and nonnegative, got {reg_strength}"
        )));
    }
    let n = dataset.sample_count() as f64;
    let c = dataset.class_count();
    let p = dataset.feature_count();
    // softmax CE has score-space curvature at most 1/2 per sample, so the
    // weight-space smoothness constant is bounded by 0.5/N sum ||x||^2 + 2reg
    let sq_sum: f64 = dataset.features().iter().map(|v| v * v).sum();
    let smoothness = 0.5 * sq_sum / n + 2.0 * reg_strength;
    let step = 1.0 / smoothness.max(1e-12);

    let mut w = Array2::zeros((c, p));
    let mut loss = f64::INFINITY;
    let mut grad_norm = f64::INFINITY;
    let mut iterations_run = 0usize;
    for _ in 0..2000 {
        let (l, grad) = rmlr_objective_grad(&w, dataset, reg_strength);
        loss = l;
        grad_norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm <= 1e-4 {
            break;
        }
        w = &w - &(step * &grad);
        iterations_run += 1;
    }
    if iterations_run == 2000 {
        // report the state at the cap
        let (l, grad) = rmlr_objective_grad(&w, dataset, reg_strength);
        loss = l;
        grad_norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    Ok(RmlrFit {
        model: LinearModel { m: w, lambda: 0.0, objective: loss },
        grad_norm,
        iterations_run,
    })
}

/// Class probabilities of the logistic model at `x`.
pub fn rmlr_probabilities(model: &LinearModel, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if x.len() != model.m.ncols() {
        return Err(Error::Dimension(format!(
            "x has {} features, model was trained on {}",
            x.len(),
            model.m.ncols()
        )));
    }
    let scores = model.m.dot(&x);
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut probs = scores.mapv(|s| (s - max).exp());
    let sum: f64 = probs.iter().sum();
    probs.mapv_inplace(|v| v / sum);
    Ok(probs)
}

/// Subgradient route for one binary kernel class problem, mirroring the
/// multiclass kernel trainer: RKHS-metric steps on the coefficients, exact
/// lambda elimination over the feasible ray lambda >= ||h||_H = sqrt(a K a).
/// (The binary hinge slope in x is the score function itself, so the floor
/// has no pairwise factor 2.)
fn fit_kernel_ova_class(
    gram_m: &GramMatrix,
    z: &[f64],
    hp: &Hyperparams,
) -> (Array1<f64>, f64, f64) {
    let n_samples = z.len();
    let n = n_samples as f64;
    let (eps, kappa) = (hp.epsilon, hp.kappa);
    let step_scale = (gram_m.k.diag().sum() / n).max(1e-12);

    let mut a = Array1::zeros(n_samples);
    let start = min_over_lambda(&vec![(1.0, 1.0); n_samples], eps, kappa, 0.0);
    let mut lambda = start.0;
    let mut best_a = a.clone();
    let mut best_lambda = start.0;
    let mut best_obj = start.1;

    for t in 1..=hp.solver.iterations {
        let sigma = hp.solver.initial_step / (t as f64 * step_scale);

        let f = gram_m.k.dot(&a); // score function at the training points
        let mut grad = Array1::zeros(n_samples);
        let mut strict = 0usize;
        let mut tie_list: Vec<usize> = Vec::new();
        let mut coefs = vec![0.0f64; n_samples];
        for smp in 0..n_samples {
            let zf = z[smp] * f[smp];
            let nom = (1.0 - zf).max(0.0);
            if kappa.is_infinite() {
                if zf < 1.0 {
                    coefs[smp] = -1.0;
                }
                continue;
            }
            let flip = 1.0 + zf - lambda * kappa;
            let tol = 1e-9 * (1.0 + nom.abs() + flip.abs());
            if flip > nom + tol {
                strict += 1;
                coefs[smp] = 1.0;
            } else if flip < nom - tol {
                if zf < 1.0 {
                    coefs[smp] = -1.0;
                }
            } else {
                tie_list.push(smp);
            }
        }
        let (theta, slope) = kink_blend(eps, kappa, n, strict, tie_list.len());
        for &smp in &tie_list {
            let zf = z[smp] * f[smp];
            let mut coef = theta;
            if zf < 1.0 {
                coef -= 1.0 - theta;
            }
            coefs[smp] = coef;
        }
        for smp in 0..n_samples {
            if coefs[smp] != 0.0 {
                grad[smp] = coefs[smp] * z[smp] / n;
            }
        }
        // floor coupling: residual lambda-slope times the RKHS gradient of
        // ||h||_H, whose coefficients are a / ||h||
        let residual = slope.max(0.0);
        let h = h_norm(a.view(), gram_m);
        if residual > 0.0 && lambda <= h + 1e-9 * (1.0 + h) && h > 0.0 {
            grad = &grad + &(a.mapv(|v| v * residual / h));
        }

        a = &a - &(sigma * &grad);

        let f = gram_m.k.dot(&a);
        let branches: Vec<(f64, f64)> = (0..n_samples)
            .map(|smp| {
                let zf = z[smp] * f[smp];
                ((1.0 - zf).max(0.0), 1.0 + zf)
            })
            .collect();
        let floor = h_norm(a.view(), gram_m);
        let (l_best, obj) = min_over_lambda(&branches, eps, kappa, floor);
        lambda = l_best;

        if obj < best_obj {
            best_obj = obj;
            best_lambda = lambda;
            best_a = a.clone();
        }
    }
    (best_a, best_lambda, best_obj)
}

/// Kernelized one-vs-all ensemble: per class, the binary counterpart of the
/// kernel upper-bound program with feasibility lambda >= ||h_c||_H.
pub fn fit_kdr_ova(
    dataset: &Dataset,
    hp: &Hyperparams,
    kernel: KernelConfig,
) -> Result<KernelOvaModel> {
    hp.validate()?;
    let gram_m = gram(dataset.features(), kernel)?;
    let c = dataset.class_count();
    let n = dataset.sample_count();
    let per_class: Vec<(Array1<f64>, f64, f64)> = (0..c)
        .into_par_iter()
        .map(|cl| fit_kernel_ova_class(&gram_m, &binary_labels(dataset, cl), hp))
        .collect();

    let mut a = Array2::zeros((c, n));
    let mut lambda = Array1::zeros(c);
    let mut objectives = Array1::zeros(c);
    for (cl, (ac, lc, oc)) in per_class.into_iter().enumerate() {
        a.row_mut(cl).assign(&ac);
        lambda[cl] = lc;
        objectives[cl] = oc;
    }
    Ok(KernelOvaModel {
        a,
        train_features: dataset.features().clone(),
        kernel,
        lambda,
        objectives,
    })
}

/// Predicted class of the kernel one-vs-all ensemble: argmax_c of class c's
/// score function at `x`, ties to the lowest index.
pub fn predict_kdr_ova(model: &KernelOvaModel, x: ArrayView1<'_, f64>) -> Result<usize> {
    let proxy = crate::core::KernelModel {
        a: model.a.clone(),
        train_features: model.train_features.clone(),
        kernel: model.kernel,
        lambda: 0.0,
        objective: 0.0,
    };
    crate::kernel::predict_kernel(&proxy, x)
}
