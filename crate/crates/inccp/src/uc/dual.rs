//! Lagrangian dualization by generator. Dual variables are the stacked
//! nonnegative multipliers x = (lambda, mu) of the load-balance and reserve
//! constraints; each component function is the (negated, share-adjusted)
//! per-generator dual term, so minimizing their sum over the orthant
//! maximizes the dual bound.

use crate::model::BoxSet;
use crate::oracle::{ComponentOracle, Problem};

use super::{solve_unit_dp, PowerGrid, UcInstance};

pub struct GeneratorDualOracle {
    gen: super::Generator,
    on_levels: Vec<f64>,
    demand: Vec<f64>,
    reserve: Vec<f64>,
    n_g: f64,
    n_t: usize,
    bound: f64,
}

impl GeneratorDualOracle {
    pub fn new(instance: &UcInstance, grid: &PowerGrid, g: usize) -> GeneratorDualOracle {
        let gen = instance.generators[g].clone();
        let n_g = instance.n_g as f64;
        // |df/dlambda_t| <= p_max + P_d_t / n_G, |df/dmu_t| <= p_max + P_r_t / n_G
        let bound = instance
            .demand
            .iter()
            .map(|d| (gen.p_max + d / n_g).powi(2))
            .chain(
                instance
                    .reserve
                    .iter()
                    .map(|r| (gen.p_max + r / n_g).powi(2)),
            )
            .sum::<f64>()
            .sqrt();
        GeneratorDualOracle {
            gen,
            on_levels: grid.on_levels(g).to_vec(),
            demand: instance.demand.clone(),
            reserve: instance.reserve.clone(),
            n_g,
            n_t: instance.n_t,
            bound,
        }
    }

    /// The maximizing schedule at a dual point (the active affine piece).
    pub fn best_schedule(&self, lambda: &[f64], mu: &[f64]) -> (f64, super::UnitSchedule) {
        solve_unit_dp(&self.gen, lambda, mu, &self.on_levels)
    }
}

impl ComponentOracle for GeneratorDualOracle {
    fn dim(&self) -> usize {
        2 * self.n_t
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (lambda, mu) = x.split_at(self.n_t);
        let (dp_value, sched) = self.best_schedule(lambda, mu);
        let mut linear = 0.0;
        let mut grad = Vec::with_capacity(2 * self.n_t);
        for t in 0..self.n_t {
            linear += lambda[t] * self.demand[t] + mu[t] * self.reserve[t];
            grad.push(sched.power[t] - self.demand[t] / self.n_g);
        }
        for t in 0..self.n_t {
            let headroom = self.gen.p_max * sched.on[t] as i32 as f64 - sched.power[t];
            grad.push(headroom - self.reserve[t] / self.n_g);
        }
        (dp_value - linear / self.n_g, grad)
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(self.bound)
    }
}

/// Builds the m = n_G component dual problem over the nonnegative orthant.
pub fn dual_problem(instance: &UcInstance, grid: &PowerGrid) -> Problem {
    let components: Vec<Box<dyn ComponentOracle>> = (0..instance.n_g)
        .map(|g| Box::new(GeneratorDualOracle::new(instance, grid, g)) as Box<dyn ComponentOracle>)
        .collect();
    Problem {
        components,
        set: BoxSet::nonneg_orthant(2 * instance.n_t),
    }
}

/// f(x) at a dual point; -f(x) is a lower bound on the optimal discretized
/// primal cost by weak duality.
pub fn dual_value(instance: &UcInstance, grid: &PowerGrid, x: &[f64]) -> f64 {
    dual_problem(instance, grid).objective(x)
}
