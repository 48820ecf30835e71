//! Exact small-instance machinery: the epigraph LP behind the robust
//! training problem (both transport cost norms), a dense two-phase simplex,
//! an LP text exporter/parser, and the closed-form worst-case risk for a
//! fixed coefficient matrix.
//!
//! Everything here is verification tooling sized for desk-scale instances;
//! the production trainer is [`crate::linear_solver`].

mod lp;
mod simplex;
mod worst_case;

pub use lp::{build_lp, export_lp, parse_lp, write_lp, LpModel, Row, Sense, Variable};
pub use simplex::solve_lp;
pub use worst_case::worst_case_risk;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Dataset, Hyperparams};
    use crate::linear_solver::fit;
    use crate::loss::{mean_cs_loss, NormKind};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels_of(classes: &[usize], c: usize) -> Array2<f64> {
        let mut l = Array2::zeros((classes.len(), c));
        for (i, &k) in classes.iter().enumerate() {
            l[[i, k]] = 1.0;
        }
        l
    }

    /// Blob instance: class centers on a circle, uniform jitter. Labels
    /// follow the features, which keeps desk-scale LPs well-conditioned.
    fn blob(seed: u64, n: usize, c: usize, p: usize, noise: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut feats = Vec::new();
        let mut classes = Vec::new();
        for i in 0..n {
            let ci = i % c;
            let angle = 2.0 * std::f64::consts::PI * ci as f64 / c as f64;
            for pi in 0..p {
                let center = match pi {
                    0 => 4.0 * angle.cos(),
                    1 => 4.0 * angle.sin(),
                    _ => 0.0,
                };
                feats.push(center + rng.random_range(-noise..noise));
            }
            classes.push(ci);
        }
        Dataset::new(Array2::from_shape_vec((n, p), feats).unwrap(), labels_of(&classes, c)).unwrap()
    }

    fn extract_m(model: &LpModel, x: &[f64], c: usize, p: usize) -> Array2<f64> {
        // variables are ordered M_0_0..M_{C-1}_{P-1} first by construction
        assert_eq!(model.variables[0].name, "M_0_0");
        Array2::from_shape_vec((c, p), x[..c * p].to_vec()).unwrap()
    }

    #[test]
    fn single_sample_zero_eps_lp_has_zero_optimum() {
        // one separable point: some M attains margin 1, so the minimum CS
        // risk (and hence the ball-free robust risk) is exactly 0
        let d = Dataset::new(
            Array2::from_shape_vec((1, 1), vec![1.0]).unwrap(),
            labels_of(&[0], 3),
        )
        .unwrap();
        let hp = Hyperparams::new(0.0, 0.5, NormKind::LInf);
        let lp = build_lp(&d, &hp).unwrap();
        let (value, _) = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_eps_huge_kappa_lp_equals_minimum_mean_cs_loss() {
        // separable blobs: the CS-risk minimum is 0, and with eps = 0 and
        // flips priced out the LP collapses to exactly that minimum
        let d = blob(3, 6, 3, 2, 0.5);
        let hp = Hyperparams::new(0.0, 1e6, NormKind::LInf);
        let lp = build_lp(&d, &hp).unwrap();
        let (value, x) = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(value, 0.0, epsilon = 1e-8);
        let m = extract_m(&lp, &x, 3, 2);
        assert!(mean_cs_loss(&m, &d).unwrap() <= 1e-8);
    }

    #[test]
    fn duplicated_dataset_has_identical_lp_optimum() {
        // the objective averages per-sample slacks, so duplicating every
        // sample leaves the optimum unchanged
        let d = blob(4, 6, 3, 2, 1.5);
        let feats = d.features();
        let mut feats2 = feats.to_owned();
        feats2.append(ndarray::Axis(0), feats.view()).unwrap();
        let mut labels2 = d.labels().to_owned();
        labels2.append(ndarray::Axis(0), d.labels().view()).unwrap();
        let doubled = Dataset::new(feats2, labels2).unwrap();

        let hp = Hyperparams::new(0.05, 0.5, NormKind::LInf);
        let (v1, _) = solve_lp(&build_lp(&d, &hp).unwrap()).unwrap();
        let (v2, _) = solve_lp(&build_lp(&doubled, &hp).unwrap()).unwrap();
        assert_abs_diff_eq!(v1, v2, epsilon = 1e-8);
    }

    #[test]
    fn strong_duality_lp_optimum_equals_worst_case_risk_at_lp_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for trial in 0..8 {
            let k = if trial % 2 == 0 { NormKind::LInf } else { NormKind::L1 };
            let n = 4 + (trial % 3) * 2;
            let d = blob(100 + trial as u64, n, 3, 2, 2.0);
            let eps = rng.random_range(0.01..0.4);
            let kappa = rng.random_range(0.1..1.0);
            let hp = Hyperparams::new(eps, kappa, k);
            let lp = build_lp(&d, &hp).unwrap();
            let (value, x) = solve_lp(&lp).unwrap();
            let m = extract_m(&lp, &x, 3, 2);
            let w = worst_case_risk(&m, &d, eps, kappa, k).unwrap();
            assert_abs_diff_eq!(value, w, epsilon = 1e-6);
        }
    }

    #[test]
    fn lp_optimum_nondecreasing_in_eps() {
        let d = blob(7, 8, 3, 2, 2.5);
        let mut prev = f64::NEG_INFINITY;
        for eps in [1e-6, 1e-3, 1e-1, 1.0] {
            let hp = Hyperparams::new(eps, 0.5, NormKind::LInf);
            let (v, _) = solve_lp(&build_lp(&d, &hp).unwrap()).unwrap();
            assert!(v >= prev - 1e-9, "eps={eps}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn lp_optimum_nonincreasing_in_kappa() {
        let d = blob(8, 8, 3, 2, 2.5);
        let mut prev = f64::INFINITY;
        for kappa in [0.0, 0.25, 0.5, 1.0, 4.0] {
            let hp = Hyperparams::new(0.1, kappa, NormKind::LInf);
            let (v, _) = solve_lp(&build_lp(&d, &hp).unwrap()).unwrap();
            assert!(v <= prev + 1e-9, "kappa={kappa}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn subgradient_best_objective_matches_lp_optimum() {
        // the trainer's best iterate lands within 1e-2 absolute of the
        // exact optimum on desk-scale instances
        for seed in [11u64, 12, 13] {
            let d = blob(seed, 9, 3, 2, 2.0);
            let mut hp = Hyperparams::new(0.05, 0.5, NormKind::LInf);
            hp.solver.iterations = 2000;
            let (model, _) = fit(&d, &hp).unwrap();
            let (lp_value, _) = solve_lp(&build_lp(&d, &hp).unwrap()).unwrap();
            assert!(
                (model.objective - lp_value).abs() <= 1e-2,
                "seed {seed}: subgradient {} vs LP {lp_value}",
                model.objective
            );
            assert!(
                model.objective >= lp_value - 1e-9,
                "subgradient value cannot undercut the exact optimum"
            );
        }
    }

    #[test]
    fn exported_lp_re_solves_identically() {
        let d = blob(9, 5, 3, 2, 1.0);
        let hp = Hyperparams::new(0.1, 0.5, NormKind::LInf);
        let lp = build_lp(&d, &hp).unwrap();
        let (v1, _) = solve_lp(&lp).unwrap();
        let reparsed = parse_lp(&write_lp(&lp).unwrap()).unwrap();
        let (v2, _) = solve_lp(&reparsed).unwrap();
        assert_abs_diff_eq!(v1, v2, epsilon = 0.0); // bit-identical model
    }
}
