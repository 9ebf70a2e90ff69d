//! Unit-commitment instances, Lagrangian dualization by generator and the
//! exact per-generator dynamic-programming oracle over a discretized schedule
//! set.

mod dp;
mod dual;
mod generate;

pub use dp::solve_unit_dp;
pub use dual::{dual_problem, dual_value, GeneratorDualOracle};
pub use generate::generate_instance;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// no-load cost per period
    pub c_nl: f64,
    /// marginal cost per MWh
    pub c_mr: f64,
    /// startup cost
    pub c_up: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// operating ramp up/down limits per period
    pub p_ru: f64,
    pub p_rd: f64,
    /// startup/shutdown ramp limits
    pub p_su: f64,
    pub p_sd: f64,
    /// minimum uptime/downtime in periods
    pub t_u: usize,
    pub t_d: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcInstance {
    #[serde(rename = "n_G")]
    pub n_g: usize,
    #[serde(rename = "n_T")]
    pub n_t: usize,
    pub generators: Vec<Generator>,
    pub demand: Vec<f64>,
    pub reserve: Vec<f64>,
}

impl UcInstance {
    pub fn validate(&self) -> Result<(), Error> {
        let err = |msg: String| Err(Error::Instance(msg));
        if self.generators.len() != self.n_g {
            return err("generator count does not match n_G".into());
        }
        if self.demand.len() != self.n_t || self.reserve.len() != self.n_t {
            return err("demand/reserve length does not match n_T".into());
        }
        if self.n_g == 0 || self.n_t == 0 {
            return err("instance must have at least one generator and period".into());
        }
        for (g, gen) in self.generators.iter().enumerate() {
            if !(0.0 <= gen.p_min && gen.p_min <= gen.p_max) {
                return err(format!("generator {g}: need 0 <= p_min <= p_max"));
            }
            if gen.t_u < 1 || gen.t_d < 1 {
                return err(format!("generator {g}: min up/down times must be >= 1"));
            }
            if gen.p_su < gen.p_min || gen.p_sd < gen.p_min {
                return err(format!(
                    "generator {g}: startup/shutdown ramps must reach p_min"
                ));
            }
            for v in [
                gen.c_nl, gen.c_mr, gen.c_up, gen.p_ru, gen.p_rd, gen.p_su, gen.p_sd,
            ] {
                if !v.is_finite() || v < 0.0 {
                    return err(format!("generator {g}: negative or non-finite parameter"));
                }
            }
        }
        if self.demand.iter().chain(&self.reserve).any(|v| !v.is_finite() || *v < 0.0) {
            return err("demand and reserve must be nonnegative".into());
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<UcInstance, Error> {
        let data = std::fs::read_to_string(path)?;
        let instance: UcInstance = serde_json::from_str(&data)?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_file(&self, path: &Path) -> Result<(), Error> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }
}

/// A per-generator commitment/dispatch trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitSchedule {
    pub on: Vec<bool>,
    pub startup: Vec<bool>,
    pub shutdown: Vec<bool>,
    pub power: Vec<f64>,
}

impl UnitSchedule {
    pub fn all_off(n_t: usize) -> UnitSchedule {
        UnitSchedule {
            on: vec![false; n_t],
            startup: vec![false; n_t],
            shutdown: vec![false; n_t],
            power: vec![0.0; n_t],
        }
    }

    /// Checks every per-unit constraint family; returns human-readable
    /// violation descriptions (empty when feasible). The unit is assumed off
    /// before the first period with its downtime already served.
    pub fn violations(&self, gen: &Generator) -> Vec<String> {
        let n_t = self.on.len();
        let mut out = Vec::new();
        let eps = 1e-9;
        let b = |v: bool| v as i32;
        for t in 0..n_t {
            let (on, up, down, p) = (self.on[t], self.startup[t], self.shutdown[t], self.power[t]);
            if p < gen.p_min * b(on) as f64 - eps || p > gen.p_max * b(on) as f64 + eps {
                out.push(format!("t={t}: power {p} outside bounds"));
            }
            let prev_on = if t == 0 { false } else { self.on[t - 1] };
            let prev_p = if t == 0 { 0.0 } else { self.power[t - 1] };
            if p - prev_p > gen.p_ru * b(prev_on) as f64 + gen.p_su * b(up) as f64 + eps {
                out.push(format!("t={t}: ramp-up violated"));
            }
            if prev_p - p > gen.p_rd * b(on) as f64 + gen.p_sd * b(down) as f64 + eps {
                out.push(format!("t={t}: ramp-down violated"));
            }
            if b(on) - b(prev_on) != b(up) - b(down) {
                out.push(format!("t={t}: switching balance violated"));
            }
            if up && down {
                out.push(format!("t={t}: simultaneous startup and shutdown"));
            }
            let up_window: i32 = (t.saturating_sub(gen.t_u - 1)..=t).map(|i| b(self.startup[i])).sum();
            if up_window > b(on) {
                out.push(format!("t={t}: minimum uptime violated"));
            }
            let down_window: i32 =
                (t.saturating_sub(gen.t_d - 1)..=t).map(|i| b(self.shutdown[i])).sum();
            if down_window > 1 - b(on) {
                out.push(format!("t={t}: minimum downtime violated"));
            }
        }
        out
    }
}

/// Admissible power levels per generator: 0 plus uniformly spaced levels
/// between p_min and p_max (both included).
#[derive(Clone, Debug, PartialEq)]
pub struct PowerGrid {
    levels: Vec<Vec<f64>>,
}

/// Default number of uniform segments between p_min and p_max.
pub const DEFAULT_SEGMENTS: usize = 8;

impl PowerGrid {
    pub fn uniform(instance: &UcInstance, segments: usize) -> PowerGrid {
        assert!(segments >= 1);
        let levels = instance
            .generators
            .iter()
            .map(|g| {
                let mut lv = vec![0.0];
                if g.p_max == g.p_min {
                    lv.push(g.p_min);
                } else {
                    let delta = (g.p_max - g.p_min) / segments as f64;
                    for j in 0..=segments {
                        lv.push(g.p_min + j as f64 * delta);
                    }
                }
                lv
            })
            .collect();
        PowerGrid { levels }
    }

    /// All levels of generator `g`, 0 first.
    pub fn levels(&self, g: usize) -> &[f64] {
        &self.levels[g]
    }

    /// The nonzero (committed) levels of generator `g`, ascending.
    pub fn on_levels(&self, g: usize) -> &[f64] {
        &self.levels[g][1..]
    }
}

/// Feasibility of a full primal candidate against the coupling constraints
/// and the per-unit constraints.
#[derive(Clone, Debug, Default)]
pub struct FeasibilityReport {
    /// periods where total output falls short of demand
    pub load_balance: Vec<usize>,
    /// periods where spinning headroom falls short of the reserve requirement
    pub reserve: Vec<usize>,
    /// (generator, description) unit-constraint violations
    pub unit: Vec<(usize, String)>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.load_balance.is_empty() && self.reserve.is_empty() && self.unit.is_empty()
    }
}

/// Total commitment cost of a candidate plus its feasibility report.
pub fn primal_cost(
    instance: &UcInstance,
    schedules: &[UnitSchedule],
) -> (f64, FeasibilityReport) {
    assert_eq!(schedules.len(), instance.n_g);
    let mut cost = 0.0;
    let mut report = FeasibilityReport::default();
    let eps = 1e-9;
    for t in 0..instance.n_t {
        let mut output = 0.0;
        let mut headroom = 0.0;
        for (g, sched) in schedules.iter().enumerate() {
            let gen = &instance.generators[g];
            cost += gen.c_nl * sched.on[t] as i32 as f64
                + gen.c_mr * sched.power[t]
                + gen.c_up * sched.startup[t] as i32 as f64;
            output += sched.power[t];
            headroom += gen.p_max * sched.on[t] as i32 as f64 - sched.power[t];
        }
        if output < instance.demand[t] - eps {
            report.load_balance.push(t);
        }
        if headroom < instance.reserve[t] - eps {
            report.reserve.push(t);
        }
    }
    for (g, sched) in schedules.iter().enumerate() {
        for v in sched.violations(&instance.generators[g]) {
            report.unit.push((g, v));
        }
    }
    (cost, report)
}
