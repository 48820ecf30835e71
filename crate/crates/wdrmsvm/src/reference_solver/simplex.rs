//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! This is a verification oracle for desk-scale instances, not a production
//! solver: rows are capped, the tableau is dense, and Bland's rule trades
//! speed for guaranteed termination. General box bounds are handled by
//! substitution (shift, mirror, or free-variable split), so callers can pass
//! any [`LpModel`] that [`LpModel::validate`] accepts.

use crate::error::Error;
use crate::Result;

use super::lp::{LpModel, Sense};

/// Hard cap on constraint rows (after upper-bound rows are materialized).
const MAX_ROWS: usize = 2000;
/// Reduced-cost tolerance.
const TOL: f64 = 1e-9;
/// Minimum magnitude of a pivot element. Rows are equilibrated to unit max
/// coefficient, so anything this small is noise; dividing by it would blow
/// the tableau up.
const PIV_TOL: f64 = 1e-7;
/// Residual tolerances certified on exit.
const FEAS_TOL: f64 = 1e-8;

/// How one original variable maps onto nonnegative tableau columns.
enum ColMap {
    /// x = col + shift, col >= 0
    Shifted { col: usize, shift: f64 },
    /// x = offset - col, col >= 0 (upper bound only)
    Mirrored { col: usize, offset: f64 },
    /// x = pos - neg, both >= 0 (free)
    Split { pos: usize, neg: usize },
}

/// Solves the LP to a basic optimal solution. Returns the optimal objective
/// value and one optimal assignment in the model's variable order. Errors:
/// [`Error::Infeasible`], [`Error::Unbounded`], [`Error::Capacity`] when the
/// row cap is exceeded, [`Error::SolverFailure`] if the final certificate
/// (primal residual <= 1e-8, reduced costs >= -1e-8) cannot be met.
pub fn solve_lp(model: &LpModel) -> Result<(f64, Vec<f64>)> {
    model.validate()?;

    // ---- variable substitutions to x >= 0 ------------------------------
    let mut maps = Vec::with_capacity(model.variables.len());
    let mut ncols = 0usize;
    for v in &model.variables {
        match (v.lower, v.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l - TOL {
                        return Err(Error::Infeasible(format!(
                            "variable {} has empty bounds [{l}, {u}]",
                            v.name
                        )));
                    }
                }
                maps.push(ColMap::Shifted { col: ncols, shift: l });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(ColMap::Mirrored { col: ncols, offset: u });
                ncols += 1;
            }
            (None, None) => {
                maps.push(ColMap::Split {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
        }
    }

    // upper bounds of shifted variables become extra rows x' <= u - l
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // (col, bound)
    for (v, map) in model.variables.iter().zip(&maps) {
        if let (ColMap::Shifted { col, shift }, Some(u)) = (map, v.upper) {
            extra_rows.push((*col, u - shift));
        }
    }
    let nrows = model.rows.len() + extra_rows.len();
    if nrows > MAX_ROWS {
        return Err(Error::Capacity(format!(
            "{nrows} rows exceed the solver cap of {MAX_ROWS}"
        )));
    }

    // ---- dense rows under the substitution -----------------------------
    let mut dense: Vec<Vec<f64>> = Vec::with_capacity(nrows);
    let mut senses: Vec<Sense> = Vec::with_capacity(nrows);
    let mut rhs: Vec<f64> = Vec::with_capacity(nrows);
    for row in &model.rows {
        let mut a = vec![0.0; ncols];
        let mut b = row.rhs;
        for &(idx, coef) in &row.coeffs {
            match maps[idx] {
                ColMap::Shifted { col, shift } => {
                    a[col] += coef;
                    b -= coef * shift;
                }
                ColMap::Mirrored { col, offset } => {
                    a[col] -= coef;
                    b -= coef * offset;
                }
                ColMap::Split { pos, neg } => {
                    a[pos] += coef;
                    a[neg] -= coef;
                }
            }
        }
        dense.push(a);
        senses.push(row.sense);
        rhs.push(b);
    }
    for &(col, bound) in &extra_rows {
        let mut a = vec![0.0; ncols];
        a[col] = 1.0;
        dense.push(a);
        senses.push(Sense::Le);
        rhs.push(bound);
    }

    // row equilibration: scale every row to unit max |coefficient| so that
    // large entries (flip rows carry kappa-scale coefficients) do not swamp
    // the absolute pivot tolerances
    for i in 0..dense.len() {
        let scale = dense[i].iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if scale > 0.0 {
            for v in dense[i].iter_mut() {
                *v /= scale;
            }
            rhs[i] /= scale;
        }
    }

    // transformed objective (constant absorbed at reconstruction)
    let mut cost = vec![0.0; ncols];
    for (idx, &c) in model.objective.iter().enumerate() {
        match maps[idx] {
            ColMap::Shifted { col, .. } => cost[col] += c,
            ColMap::Mirrored { col, .. } => cost[col] -= c,
            ColMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    // ---- standard form: rhs >= 0, slacks, artificials -------------------
    for i in 0..dense.len() {
        if rhs[i] < 0.0 {
            for v in dense[i].iter_mut() {
                *v = -*v;
            }
            rhs[i] = -rhs[i];
            senses[i] = match senses[i] {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let m = dense.len();
    let n_slack: usize = senses
        .iter()
        .filter(|s| !matches!(s, Sense::Eq))
        .count();
    let n_artificial: usize = senses
        .iter()
        .filter(|s| matches!(s, Sense::Ge | Sense::Eq))
        .count();
    let total = ncols + n_slack + n_artificial;

    // tableau[i] has `total` coefficient columns plus the rhs in a separate
    // vector; basis[i] is the column basic in row i
    let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = vec![usize::MAX; m];
    let art_base = ncols + n_slack;
    {
        let mut slack_at = ncols;
        let mut art_at = art_base;
        for i in 0..m {
            let mut row = vec![0.0; total];
            row[..ncols].copy_from_slice(&dense[i]);
            match senses[i] {
                Sense::Le => {
                    row[slack_at] = 1.0;
                    basis[i] = slack_at;
                    slack_at += 1;
                }
                Sense::Ge => {
                    row[slack_at] = -1.0;
                    slack_at += 1;
                    row[art_at] = 1.0;
                    basis[i] = art_at;
                    art_at += 1;
                }
                Sense::Eq => {
                    row[art_at] = 1.0;
                    basis[i] = art_at;
                    art_at += 1;
                }
            }
            tableau.push(row);
        }
    }

    let max_pivots = 50_000 + 200 * m;

    // ---- phase 1: drive artificials to zero ----------------------------
    if n_artificial > 0 {
        let mut phase1 = vec![0.0; total];
        for j in art_base..total {
            phase1[j] = 1.0;
        }
        let value = run_simplex(&mut tableau, &mut rhs, &mut basis, &phase1, art_base, max_pivots)?;
        if value > 1e-7 {
            return Err(Error::Infeasible(format!(
                "phase-1 optimum {value:.3e} > 0"
            )));
        }
        // artificials still basic sit at level zero, but later pivots could
        // push them positive again, silently relaxing their rows. Pivot each
        // one out on any usable original column; a row with none is
        // redundant and is zeroed out so it can never participate again.
        for i in 0..m {
            if basis[i] < art_base {
                continue;
            }
            let enter = (0..art_base)
                .max_by(|&a, &b| {
                    tableau[i][a]
                        .abs()
                        .partial_cmp(&tableau[i][b].abs())
                        .unwrap()
                })
                .filter(|&j| tableau[i][j].abs() > PIV_TOL);
            if let Some(e) = enter {
                // degenerate pivot: the artificial sits at (numerical) zero,
                // so any usable element works regardless of sign
                let piv = tableau[i][e];
                for v in tableau[i].iter_mut() {
                    *v /= piv;
                }
                rhs[i] = (rhs[i] / piv).max(0.0);
                for r in 0..m {
                    if r != i {
                        let f = tableau[r][e];
                        if f != 0.0 {
                            for j in 0..total {
                                tableau[r][j] -= f * tableau[i][j];
                            }
                            rhs[r] -= f * rhs[i];
                        }
                    }
                }
                basis[i] = e;
            } else {
                for v in tableau[i].iter_mut() {
                    *v = 0.0;
                }
                rhs[i] = 0.0;
            }
        }
    }

    // ---- phase 2: original costs, artificial columns barred ------------
    let mut full_cost = cost;
    full_cost.resize(total, 0.0);
    run_simplex(&mut tableau, &mut rhs, &mut basis, &full_cost, art_base, max_pivots)?;

    // ---- reconstruct, certify, report ----------------------------------
    let mut xt = vec![0.0; total];
    for (i, &b) in basis.iter().enumerate() {
        xt[b] = rhs[i];
    }
    let mut x = vec![0.0; model.variables.len()];
    for (idx, map) in maps.iter().enumerate() {
        x[idx] = match *map {
            ColMap::Shifted { col, shift } => xt[col] + shift,
            ColMap::Mirrored { col, offset } => offset - xt[col],
            ColMap::Split { pos, neg } => xt[pos] - xt[neg],
        };
    }
    let value: f64 = model
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();

    for (r, row) in model.rows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().map(|&(i, c)| c * x[i]).sum();
        let violation = match row.sense {
            Sense::Le => lhs - row.rhs,
            Sense::Ge => row.rhs - lhs,
            Sense::Eq => (lhs - row.rhs).abs(),
        };
        if violation > FEAS_TOL * (1.0 + row.rhs.abs()) {
            return Err(Error::SolverFailure(format!(
                "row {r} violated by {violation:.3e} at the reported optimum"
            )));
        }
    }
    for (v, &xi) in model.variables.iter().zip(&x) {
        if v.lower.map_or(false, |l| xi < l - FEAS_TOL)
            || v.upper.map_or(false, |u| xi > u + FEAS_TOL)
        {
            return Err(Error::SolverFailure(format!(
                "variable {} = {xi} violates its bounds at the reported optimum",
                v.name
            )));
        }
    }
    Ok((value, x))
}

/// Runs Bland-rule simplex on the tableau for the given costs; columns with
/// index >= `barred_from` never enter (used to bar artificials in phase 2).
/// Returns the phase objective value sum(c_B * b).
fn run_simplex(
    tableau: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    cost: &[f64],
    barred_from: usize,
    max_pivots: usize,
) -> Result<f64> {
    let m = tableau.len();
    let total = cost.len();

    // Pivot selection runs in two regimes. The default favors numerical
    // stability: most-negative reduced cost entering, largest pivot element
    // among minimum-ratio rows leaving (a tiny pivot element scales the
    // whole tableau by its reciprocal and wrecks feasibility downstream).
    // After a long run of consecutive degenerate pivots the loop switches to
    // Bland's rule (smallest indices), which cannot cycle; any pivot that
    // moves the basic solution switches back.
    let mut bland = false;
    let mut stalled = 0usize;
    let stall_limit = 4 * (m + 1);

    for _ in 0..max_pivots {
        // reduced costs r_j = c_j - sum_i c_B(i) * T[i][j], recomputed fresh
        // each pivot: incremental updates accumulate error across pivots
        let mut reduced = cost.to_vec();
        for i in 0..m {
            let cb = cost[basis[i]];
            if cb != 0.0 {
                for j in 0..total {
                    reduced[j] -= cb * tableau[i][j];
                }
            }
        }
        // entering candidates: negative reduced cost and a usable pivot
        // element. A column with no positive entry is a true unbounded ray;
        // one whose positive entries sit below PIV_TOL cannot be pivoted on
        // safely and is skipped. Artificials never re-enter.
        let mut entering = None;
        for j in 0..barred_from {
            if reduced[j] < -TOL {
                let col_max = (0..m)
                    .map(|i| tableau[i][j])
                    .fold(f64::NEG_INFINITY, f64::max);
                if col_max > PIV_TOL {
                    if bland {
                        entering = Some((j, reduced[j]));
                        break;
                    }
                    if entering.is_none_or(|(_, r)| reduced[j] < r) {
                        entering = Some((j, reduced[j]));
                    }
                } else if col_max <= 1e-12 {
                    return Err(Error::Unbounded);
                }
            }
        }
        let Some(e) = entering.map(|(j, _)| j) else {
            let value: f64 = (0..m).map(|i| cost[basis[i]] * rhs[i]).sum();
            return Ok(value);
        };
        // ratio test, two passes: the exact minimum ratio first, then the
        // tie-break among rows within a whisker of it. Pivoting on a row
        // whose ratio exceeds the true minimum drives other rows' rhs
        // negative, so the tie window must never widen the minimum itself.
        let mut min_ratio = f64::INFINITY;
        for i in 0..m {
            let a = tableau[i][e];
            if a > PIV_TOL {
                min_ratio = min_ratio.min(rhs[i].max(0.0) / a);
            }
        }
        debug_assert!(min_ratio.is_finite());
        let window = min_ratio + 1e-12 * (1.0 + min_ratio.abs());
        let mut leave: Option<usize> = None;
        for i in 0..m {
            let a = tableau[i][e];
            if a > PIV_TOL && rhs[i].max(0.0) / a <= window {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if bland {
                            basis[i] < basis[l]
                        } else {
                            a > tableau[l][e]
                        }
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
        }
        let l = leave.expect("some row attains the minimum ratio");

        if min_ratio <= 1e-12 {
            stalled += 1;
            if stalled > stall_limit {
                bland = true;
            }
        } else {
            stalled = 0;
            bland = false;
        }

        // pivot on (l, e)
        let piv = tableau[l][e];
        for v in tableau[l].iter_mut() {
            *v /= piv;
        }
        rhs[l] /= piv;
        for i in 0..m {
            if i != l {
                let f = tableau[i][e];
                if f != 0.0 {
                    for j in 0..total {
                        tableau[i][j] -= f * tableau[l][j];
                    }
                    rhs[i] -= f * rhs[l];
                    if rhs[i] < 0.0 && rhs[i] > -1e-9 {
                        rhs[i] = 0.0; // keep degeneracy from flipping sign
                    }
                }
            }
        }
        basis[l] = e;
    }
    Err(Error::SolverFailure(format!(
        "pivot limit {max_pivots} reached"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference_solver::lp::{Row, Variable};
    use approx::assert_abs_diff_eq;

    fn var(name: &str, lower: Option<f64>, upper: Option<f64>) -> Variable {
        Variable {
            name: name.into(),
            lower,
            upper,
        }
    }

    #[test]
    fn minimum_of_x_at_least_three_is_three() {
        let m = LpModel {
            variables: vec![var("x", Some(0.0), None)],
            objective: vec![1.0],
            rows: vec![Row {
                coeffs: vec![(0, 1.0)],
                sense: Sense::Ge,
                rhs: 3.0,
            }],
        };
        let (v, x) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn free_variable_reaches_negative_optimum() {
        let m = LpModel {
            variables: vec![var("x", None, None)],
            objective: vec![1.0],
            rows: vec![Row {
                coeffs: vec![(0, 1.0)],
                sense: Sense::Ge,
                rhs: -5.0,
            }],
        };
        let (v, x) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(v, -5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0], -5.0, epsilon = 1e-9);
    }

    #[test]
    fn upper_bound_only_variable_is_mirrored() {
        let m = LpModel {
            variables: vec![var("x", None, Some(3.5))],
            objective: vec![-1.0],
            rows: vec![],
        };
        let (v, x) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(v, -3.5, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0], 3.5, epsilon = 1e-9);
    }

    #[test]
    fn box_bounds_and_simplex_face() {
        // min -x - y on x + y <= 1, 0 <= x,y <= 1 -> -1 on the face x+y=1
        let m = LpModel {
            variables: vec![var("x", Some(0.0), Some(1.0)), var("y", Some(0.0), Some(1.0))],
            objective: vec![-1.0, -1.0],
            rows: vec![Row {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                sense: Sense::Le,
                rhs: 1.0,
            }],
        };
        let (v, x) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0] + x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_rows_are_respected() {
        // min x + y s.t. x + 2y = 4, x - y = 1 -> unique point (2, 1)
        let m = LpModel {
            variables: vec![var("x", None, None), var("y", None, None)],
            objective: vec![1.0, 1.0],
            rows: vec![
                Row {
                    coeffs: vec![(0, 1.0), (1, 2.0)],
                    sense: Sense::Eq,
                    rhs: 4.0,
                },
                Row {
                    coeffs: vec![(0, 1.0), (1, -1.0)],
                    sense: Sense::Eq,
                    rhs: 1.0,
                },
            ],
        };
        let (v, x) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-8);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let m = LpModel {
            variables: vec![var("x", Some(0.0), None)],
            objective: vec![1.0],
            rows: vec![Row {
                coeffs: vec![(0, 1.0)],
                sense: Sense::Le,
                rhs: -1.0,
            }],
        };
        assert!(matches!(solve_lp(&m), Err(Error::Infeasible(_))));
    }

    #[test]
    fn empty_bound_interval_is_infeasible() {
        let m = LpModel {
            variables: vec![var("x", Some(2.0), Some(1.0))],
            objective: vec![1.0],
            rows: vec![],
        };
        assert!(matches!(solve_lp(&m), Err(Error::Infeasible(_))));
    }

    #[test]
    fn descent_direction_without_bound_is_unbounded() {
        let m = LpModel {
            variables: vec![var("x", Some(0.0), None)],
            objective: vec![-1.0],
            rows: vec![],
        };
        assert!(matches!(solve_lp(&m), Err(Error::Unbounded)));
    }

    #[test]
    fn row_cap_returns_capacity_error() {
        let rows = (0..2001)
            .map(|_| Row {
                coeffs: vec![(0, 1.0)],
                sense: Sense::Ge,
                rhs: 0.0,
            })
            .collect();
        let m = LpModel {
            variables: vec![var("x", Some(0.0), None)],
            objective: vec![1.0],
            rows,
        };
        assert!(matches!(solve_lp(&m), Err(Error::Capacity(_))));
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // three redundant rows meet at the origin; Bland must not cycle
        let m = LpModel {
            variables: vec![var("x", Some(0.0), None), var("y", Some(0.0), None)],
            objective: vec![-1.0, -1.0],
            rows: vec![
                Row {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    sense: Sense::Le,
                    rhs: 2.0,
                },
                Row {
                    coeffs: vec![(0, 1.0)],
                    sense: Sense::Le,
                    rhs: 1.0,
                },
                Row {
                    coeffs: vec![(1, 1.0)],
                    sense: Sense::Le,
                    rhs: 1.0,
                },
                Row {
                    coeffs: vec![(0, 2.0), (1, 2.0)],
                    sense: Sense::Le,
                    rhs: 4.0,
                },
            ],
        };
        let (v, _) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(v, -2.0, epsilon = 1e-9);
    }

    #[test]
    fn duplicate_coefficients_accumulate() {
        // row written as x + x >= 4 must behave as 2x >= 4
        let m = LpModel {
            variables: vec![var("x", Some(0.0), None)],
            objective: vec![1.0],
            rows: vec![Row {
                coeffs: vec![(0, 1.0), (0, 1.0)],
                sense: Sense::Ge,
                rhs: 4.0,
            }],
        };
        let (v, x) = solve_lp(&m).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-9);
    }
}
