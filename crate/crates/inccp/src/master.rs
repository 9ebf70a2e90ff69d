//! Regularized master problem: minimize the sum of the per-component models
//! plus a proximal term over the box.
//!
//! The solve works on the concave dual of the epigraph formulation, whose
//! feasible set is a product of per-component simplices over the cut weights.
//! The primal point is recovered in closed form from the weighted subgradient
//! aggregate, `x = P_X(x_k - t * sum alpha g)`, so the duality gap is
//! computable exactly and serves as the optimality certificate.

use crate::model::{Bundle, BoxSet};
use crate::vecmath::{axpy, dist, dot};
use crate::Error;

/// Internal sweep budget for one master solve.
pub const SWEEP_BUDGET: usize = 10_000;

/// Default relative tolerance; the certified gap is `tol * (1 + |objective|)`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Weights below this are treated as inactive in complementarity checks.
const ACTIVE_WEIGHT: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct MasterSolution {
    /// Minimizer of the regularized model over the box.
    pub x_next: Vec<f64>,
    /// Per-component, per-cut simplex weights, aligned with the bundles' cuts.
    pub weights: Vec<Vec<f64>>,
    /// Pre-projection point `x_k - t_k * sum alpha g`.
    pub u_pre: Vec<f64>,
    /// Value of the regularized model at `x_next`.
    pub objective: f64,
    /// Final duality gap (optimality certificate).
    pub kkt_residual: f64,
    /// Sweeps spent in the dual ascent.
    pub sweeps: usize,
}

/// Residuals of the weight/projection representation of a master solution.
#[derive(Clone, Copy, Debug)]
pub struct WeightReport {
    /// ||x_next - P_X(u_pre)||
    pub projection_residual: f64,
    /// max over nonempty components of |sum_l alpha_l - 1|
    pub simplex_residual: f64,
    /// smallest weight
    pub min_weight: f64,
    /// max over active cuts of (model value - cut value) at x_next
    pub complementarity: f64,
}

struct DualState<'a> {
    bundles: &'a [Bundle],
    x_k: &'a [f64],
    t_k: f64,
    set: &'a BoxSet,
    /// weighted subgradient aggregate, sum over all cuts of alpha * g
    aggregate: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

impl DualState<'_> {
    fn recompute_aggregate(&mut self) {
        self.aggregate.iter_mut().for_each(|v| *v = 0.0);
        for (b, w) in self.bundles.iter().zip(&self.weights) {
            for (cut, &a) in b.cuts.iter().zip(w) {
                if a != 0.0 {
                    axpy(a, &cut.gradient, &mut self.aggregate);
                }
            }
        }
    }

    /// Primal recovery for a given shift of the aggregate.
    fn primal_point(&self, shift: Option<(f64, &[f64])>) -> Vec<f64> {
        let mut u: Vec<f64> = self
            .x_k
            .iter()
            .zip(&self.aggregate)
            .map(|(x, s)| x - self.t_k * s)
            .collect();
        if let Some((tau, w)) = shift {
            for (ui, wi) in u.iter_mut().zip(w) {
                *ui -= self.t_k * tau * wi;
            }
        }
        self.set.project_into(&mut u);
        u
    }

    /// Duality gap, complementarity residual and primal objective at the
    /// current weights.
    fn certificate(&self) -> (f64, f64, f64) {
        let x = self.primal_point(None);
        let mut gap = 0.0;
        let mut comp: f64 = 0.0;
        let mut primal = dist(&x, self.x_k).powi(2) / (2.0 * self.t_k);
        for (b, w) in self.bundles.iter().zip(&self.weights) {
            if b.is_empty() {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            let mut weighted = 0.0;
            let mut vals = Vec::with_capacity(b.cuts.len());
            for (cut, &a) in b.cuts.iter().zip(w) {
                let v = cut.value_at(&x);
                best = best.max(v);
                weighted += a * v;
                vals.push(v);
            }
            for (&v, &a) in vals.iter().zip(w) {
                if a > ACTIVE_WEIGHT {
                    comp = comp.max(best - v);
                }
            }
            gap += best - weighted;
            primal += best;
        }
        (gap, comp, primal)
    }
}

/// Solves the master problem to a certified duality gap of
/// `tol * (1 + |objective|)`. `warm_start`, when given and shape-compatible,
/// seeds the dual weights (e.g. with the previous iteration's solution).
pub fn solve_master(
    bundles: &[Bundle],
    x_k: &[f64],
    t_k: f64,
    set: &BoxSet,
    tol: f64,
    warm_start: Option<&[Vec<f64>]>,
) -> Result<MasterSolution, Error> {
    if !(t_k > 0.0) || !t_k.is_finite() {
        return Err(Error::Config("master step size must be positive".into()));
    }
    if x_k.len() != set.dim() {
        return Err(Error::Config("master point/box dimension mismatch".into()));
    }
    let n = x_k.len();

    let weights = initial_weights(bundles, warm_start);
    let mut state = DualState {
        bundles,
        x_k,
        t_k,
        set,
        aggregate: vec![0.0; n],
        weights,
    };
    state.recompute_aggregate();

    if bundles.iter().all(Bundle::is_empty) {
        // The model is identically zero; the prox center is the minimizer.
        return Ok(MasterSolution {
            x_next: x_k.to_vec(),
            weights: state.weights,
            u_pre: x_k.to_vec(),
            objective: 0.0,
            kkt_residual: 0.0,
            sweeps: 0,
        });
    }

    let mut sweeps = 0;
    let mut last;
    loop {
        let (gap, comp, primal) = state.certificate();
        last = (gap, comp, primal);
        let threshold = tol * (1.0 + primal.abs());
        if gap <= threshold && comp <= threshold {
            break;
        }
        if sweeps >= SWEEP_BUDGET {
            return Err(Error::MasterNotCertified {
                residual: gap,
                tol: threshold,
                sweeps,
            });
        }
        sweep(&mut state);
        sweeps += 1;
        // Drift from incremental aggregate updates is flushed periodically.
        if sweeps % 64 == 0 {
            state.recompute_aggregate();
        }
    }

    state.recompute_aggregate();
    let u_pre: Vec<f64> = x_k
        .iter()
        .zip(&state.aggregate)
        .map(|(x, s)| x - t_k * s)
        .collect();
    let x_next = set.project(&u_pre);
    let objective = bundles
        .iter()
        .map(|b| b.model_value(&x_next))
        .sum::<f64>()
        + dist(&x_next, x_k).powi(2) / (2.0 * t_k);
    Ok(MasterSolution {
        x_next,
        weights: state.weights,
        u_pre,
        objective,
        kkt_residual: last.0,
        sweeps,
    })
}

fn initial_weights(bundles: &[Bundle], warm_start: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    bundles
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if b.is_empty() {
                return Vec::new();
            }
            if let Some(ws) = warm_start {
                if let Some(w) = ws.get(i) {
                    if w.len() == b.cuts.len()
                        && w.iter().all(|v| v.is_finite() && *v >= 0.0)
                    {
                        let s: f64 = w.iter().sum();
                        if s > 0.0 {
                            return w.iter().map(|v| v / s).collect();
                        }
                    }
                }
            }
            vec![1.0 / b.cuts.len() as f64; b.cuts.len()]
        })
        .collect()
}

/// One cyclic pass over the components. Per component, a few pairwise steps
/// shift weight from the worst active cut to the best cut, with exact line
/// search along the induced primal path.
fn sweep(state: &mut DualState<'_>) {
    const INNER_STEPS: usize = 4;
    for i in 0..state.bundles.len() {
        if state.bundles[i].cuts.len() < 2 {
            continue;
        }
        for _ in 0..INNER_STEPS {
            if !pairwise_step(state, i) {
                break;
            }
        }
    }
}

/// One pairwise move within component `i`. Returns false when the block is
/// locally optimal.
fn pairwise_step(state: &mut DualState<'_>, i: usize) -> bool {
    let x = state.primal_point(None);
    let cuts = &state.bundles[i].cuts;
    let w = &state.weights[i];

    let mut toward = 0;
    let mut toward_val = f64::NEG_INFINITY;
    let mut away = usize::MAX;
    let mut away_val = f64::INFINITY;
    for (l, cut) in cuts.iter().enumerate() {
        let v = cut.value_at(&x);
        if v > toward_val {
            toward_val = v;
            toward = l;
        }
        if w[l] > 0.0 && v < away_val {
            away_val = v;
            away = l;
        }
    }
    if away == usize::MAX || away == toward {
        return false;
    }
    // Directional derivative of the dual along e_toward - e_away at tau = 0.
    if toward_val - away_val <= f64::EPSILON * (1.0 + toward_val.abs()) {
        return false;
    }

    let dir: Vec<f64> = cuts[toward]
        .gradient
        .iter()
        .zip(&cuts[away].gradient)
        .map(|(a, b)| a - b)
        .collect();
    let db = cuts[toward].intercept - cuts[away].intercept;
    let tau_max = state.weights[i][away];

    // q'(tau) = db + dir . P_X(x_k - t (s + tau dir)); concave dual makes it
    // nonincreasing, so the maximizer is found by bisection.
    let slope = |tau: f64| db + dot(&dir, &state.primal_point(Some((tau, &dir))));
    let tau = if slope(tau_max) >= 0.0 {
        tau_max
    } else {
        let (mut lo, mut hi) = (0.0_f64, tau_max);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    if tau <= 0.0 {
        return false;
    }

    state.weights[i][toward] += tau;
    if tau >= tau_max {
        state.weights[i][away] = 0.0;
    } else {
        state.weights[i][away] -= tau;
    }
    axpy(tau, &dir, &mut state.aggregate);
    true
}

/// Recomputes the weight/projection representation residuals of a master
/// solution from scratch. A report with violations is still returned; callers
/// assert on the fields.
pub fn verify_weight_representation(
    solution: &MasterSolution,
    bundles: &[Bundle],
    x_k: &[f64],
    t_k: f64,
    set: &BoxSet,
) -> WeightReport {
    let n = x_k.len();
    let mut aggregate = vec![0.0; n];
    let mut simplex_residual: f64 = 0.0;
    let mut min_weight = f64::INFINITY;
    for (b, w) in bundles.iter().zip(&solution.weights) {
        let mut sum = 0.0;
        for (cut, &a) in b.cuts.iter().zip(w) {
            axpy(a, &cut.gradient, &mut aggregate);
            sum += a;
            min_weight = min_weight.min(a);
        }
        let target = if b.is_empty() { 0.0 } else { 1.0 };
        simplex_residual = simplex_residual.max((sum - target).abs());
    }
    if min_weight == f64::INFINITY {
        min_weight = 0.0;
    }

    let u: Vec<f64> = x_k
        .iter()
        .zip(&aggregate)
        .map(|(x, s)| x - t_k * s)
        .collect();
    let projection_residual = dist(&solution.x_next, &set.project(&u));

    let mut complementarity: f64 = 0.0;
    for (b, w) in bundles.iter().zip(&solution.weights) {
        if b.is_empty() {
            continue;
        }
        let best = b.model_value(&solution.x_next);
        for (cut, &a) in b.cuts.iter().zip(w) {
            if a > ACTIVE_WEIGHT {
                complementarity = complementarity.max(best - cut.value_at(&solution.x_next));
            }
        }
    }

    WeightReport {
        projection_residual,
        simplex_residual,
        min_weight,
        complementarity,
    }
}
