//! Independent reference computations for the verification suite. Everything
//! here deliberately avoids the crate's solver internals: the master model is
//! re-evaluated from raw cut data, and the single-unit profit maximization is
//! done by exhaustive enumeration instead of dynamic programming.

use inccp::model::BoxSet;
use inccp::uc::{primal_cost, Generator, PowerGrid, UcInstance, UnitSchedule};

/// Master objective rebuilt from raw (gradient, intercept) pairs:
/// sum_i max_l (g . x + c) [0 for empty components] + ||x - x_k||^2 / (2 t).
pub fn reference_master_objective(
    raw_bundles: &[Vec<(Vec<f64>, f64)>],
    x: &[f64],
    x_k: &[f64],
    t: f64,
) -> f64 {
    let mut total = 0.0;
    for cuts in raw_bundles {
        if cuts.is_empty() {
            continue;
        }
        total += cuts
            .iter()
            .map(|(g, c)| g.iter().zip(x).map(|(gi, xi)| gi * xi).sum::<f64>() + c)
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let prox: f64 = x
        .iter()
        .zip(x_k)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / (2.0 * t);
    total + prox
}

/// Nested grid search over the box (dimensions 1 and 2 only): `stages`
/// refinements with `pts + 1` points per axis, each stage centered on the
/// previous best with the range shrunk to two old grid cells.
pub fn grid_minimize(
    f: impl Fn(&[f64]) -> f64,
    set: &BoxSet,
    center: &[f64],
    radius: f64,
    stages: usize,
    pts: usize,
) -> (Vec<f64>, f64) {
    let n = center.len();
    assert!(n == 1 || n == 2, "grid search is for n <= 2");
    let mut c = center.to_vec();
    let mut r = radius;
    let mut best_x = set.project(&c);
    let mut best_f = f(&best_x);
    for _ in 0..stages {
        let axis = |j: usize, i: usize| c[j] - r + 2.0 * r * i as f64 / pts as f64;
        if n == 1 {
            for i in 0..=pts {
                let x = set.project(&[axis(0, i)]);
                let v = f(&x);
                if v < best_f {
                    best_f = v;
                    best_x = x;
                }
            }
        } else {
            for i in 0..=pts {
                for j in 0..=pts {
                    let x = set.project(&[axis(0, i), axis(1, j)]);
                    let v = f(&x);
                    if v < best_f {
                        best_f = v;
                        best_x = x;
                    }
                }
            }
        }
        c = best_x.clone();
        // keep several old grid cells in range so a near-flat direction
        // cannot push the true minimizer outside the next stage
        r = (4.0 * (2.0 * r / pts as f64)).max(r / 8.0);
    }
    (best_x, best_f)
}

/// Dense Gaussian elimination with partial pivoting; None when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Exact reference minimizer of the master objective, by exhaustive
/// enumeration of KKT active sets of the equivalent epigraph program
///   min ||x - x_k||^2/(2t) + sum_i z_i
///   s.t. z_i >= g . x + c for every cut of component i, x in the box.
/// Every active subset of size <= #variables is solved as a linear system and
/// kept when primal/dual feasible; the best feasible candidate is returned.
/// Small instances only (<= ~16 constraints).
pub fn reference_master_minimize(
    raw_bundles: &[Vec<(Vec<f64>, f64)>],
    x_k: &[f64],
    t: f64,
    set: &BoxSet,
) -> (Vec<f64>, f64) {
    let n = x_k.len();
    let nonempty: Vec<usize> = (0..raw_bundles.len())
        .filter(|&i| !raw_bundles[i].is_empty())
        .collect();
    let mz = nonempty.len();
    let d = n + mz; // variables: x then one epigraph level per nonempty component

    // constraints as rows over the variables: row . y <= rhs
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut owner: Vec<Option<usize>> = Vec::new(); // z-slot of cut constraints
    for (slot, &i) in nonempty.iter().enumerate() {
        for (g, c) in &raw_bundles[i] {
            let mut row = vec![0.0; d];
            row[..n].copy_from_slice(g);
            row[n + slot] = -1.0;
            rows.push(row);
            rhs.push(-c);
            owner.push(Some(slot));
        }
    }
    for j in 0..n {
        if set.lower()[j].is_finite() {
            let mut row = vec![0.0; d];
            row[j] = -1.0;
            rows.push(row);
            rhs.push(-set.lower()[j]);
            owner.push(None);
        }
        if set.upper()[j].is_finite() {
            let mut row = vec![0.0; d];
            row[j] = 1.0;
            rows.push(row);
            rhs.push(set.upper()[j]);
            owner.push(None);
        }
    }
    let kc = rows.len();
    assert!(kc <= 20, "reference solver is for tiny problems");

    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1u32 << kc) {
        let s = mask.count_ones() as usize;
        if s > d {
            continue;
        }
        // stationarity in each z forces >= one active cut per nonempty component
        let mut covered = vec![false; mz];
        for c in 0..kc {
            if mask & (1 << c) != 0 {
                if let Some(slot) = owner[c] {
                    covered[slot] = true;
                }
            }
        }
        if covered.iter().any(|c| !c) {
            continue;
        }
        let active: Vec<usize> = (0..kc).filter(|c| mask & (1 << c) != 0).collect();

        // KKT system in (y, lambda)
        let dim = d + s;
        let mut a = vec![vec![0.0; dim]; dim];
        let mut b = vec![0.0; dim];
        for j in 0..n {
            a[j][j] = 1.0 / t;
            b[j] = x_k[j] / t;
        }
        for slot in 0..mz {
            b[n + slot] = -1.0;
        }
        for (ai, &c) in active.iter().enumerate() {
            for j in 0..d {
                a[j][d + ai] = rows[c][j];
                a[d + ai][j] = rows[c][j];
            }
            b[d + ai] = rhs[c];
        }
        let Some(sol) = solve_linear(a, b) else { continue };
        if sol[d..].iter().any(|&l| l < -1e-8) {
            continue;
        }
        let y = &sol[..d];
        if (0..kc).any(|c| {
            rows[c].iter().zip(y).map(|(r, v)| r * v).sum::<f64>() > rhs[c] + 1e-8
        }) {
            continue;
        }
        let x = set.project(&y[..n]); // clears 1e-8-scale box violations
        let f = reference_master_objective(raw_bundles, &x, x_k, t);
        if best.as_ref().map_or(true, |(_, bf)| f < *bf) {
            best = Some((x, f));
        }
    }
    best.expect("no KKT-feasible candidate found")
}

/// All per-unit schedules over `on_levels` that satisfy every unit constraint
/// (the unit starts off with its downtime served).
pub fn enumerate_feasible_schedules(
    gen: &Generator,
    on_levels: &[f64],
    n_t: usize,
) -> Vec<UnitSchedule> {
    // choice per period: None = off, Some(level index) = on at that level
    let n_choices = on_levels.len() + 1;
    let total = n_choices.pow(n_t as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut rest = code;
        let mut sched = UnitSchedule::all_off(n_t);
        for t in 0..n_t {
            let choice = rest % n_choices;
            rest /= n_choices;
            if choice > 0 {
                sched.on[t] = true;
                sched.power[t] = on_levels[choice - 1];
            }
        }
        for t in 0..n_t {
            let prev_on = t > 0 && sched.on[t - 1];
            sched.startup[t] = sched.on[t] && !prev_on;
            sched.shutdown[t] = !sched.on[t] && prev_on;
        }
        if sched.violations(gen).is_empty() {
            out.push(sched);
        }
    }
    out
}

/// Exhaustive counterpart of the single-unit profit maximization. The reward
/// is accumulated period by period with the same expression and the same
/// addition order as the recursion under test, so optimal values can be
/// compared exactly.
pub fn enumerate_unit_best(
    gen: &Generator,
    lambda: &[f64],
    mu: &[f64],
    on_levels: &[f64],
) -> (f64, UnitSchedule) {
    let n_t = lambda.len();
    let mut best_value = f64::NEG_INFINITY;
    let mut best = UnitSchedule::all_off(n_t);
    for sched in enumerate_feasible_schedules(gen, on_levels, n_t) {
        let mut value = 0.0;
        for t in 0..n_t {
            if sched.on[t] {
                let p = sched.power[t];
                let start = sched.startup[t];
                value += lambda[t] * p + mu[t] * (gen.p_max - p)
                    - (gen.c_nl + gen.c_mr * p + if start { gen.c_up } else { 0.0 });
            } else {
                value += 0.0;
            }
        }
        if value > best_value {
            best_value = value;
            best = sched;
        }
    }
    (best_value, best)
}

/// Minimum total cost over all combinations of per-unit feasible schedules
/// that also satisfy load balance and reserve. Returns None when no
/// combination is feasible. Exponential; tiny instances only.
pub fn brute_force_primal_optimum(instance: &UcInstance, grid: &PowerGrid) -> Option<f64> {
    let per_unit: Vec<Vec<UnitSchedule>> = (0..instance.n_g)
        .map(|g| {
            enumerate_feasible_schedules(
                &instance.generators[g],
                grid.on_levels(g),
                instance.n_t,
            )
        })
        .collect();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; instance.n_g];
    loop {
        let candidate: Vec<UnitSchedule> = pick
            .iter()
            .enumerate()
            .map(|(g, &i)| per_unit[g][i].clone())
            .collect();
        let (cost, report) = primal_cost(instance, &candidate);
        if report.is_feasible() {
            best = Some(best.map_or(cost, |b: f64| b.min(cost)));
        }
        // odometer over the cross product
        let mut g = 0;
        loop {
            if g == instance.n_g {
                return best;
            }
            pick[g] += 1;
            if pick[g] < per_unit[g].len() {
                break;
            }
            pick[g] = 0;
            g += 1;
        }
    }
}
