//! Exact single-generator profit maximization over the discretized schedule
//! set, by dynamic programming over (period, commitment counter, power level).

use super::{Generator, UnitSchedule};

/// DP state at the end of a period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    /// Off for `d` periods (saturating at t_d; d == t_d means the unit may
    /// start).
    Off { d: usize },
    /// On for `u` periods (saturating at t_u) at on-level index `level`.
    On { u: usize, level: usize },
}

struct StateSpace {
    t_u: usize,
    t_d: usize,
    n_levels: usize,
}

impl StateSpace {
    fn len(&self) -> usize {
        self.t_d + self.t_u * self.n_levels
    }

    fn index(&self, s: State) -> usize {
        match s {
            State::Off { d } => d - 1,
            State::On { u, level } => self.t_d + (u - 1) * self.n_levels + level,
        }
    }

    fn state(&self, idx: usize) -> State {
        if idx < self.t_d {
            State::Off { d: idx + 1 }
        } else {
            let rest = idx - self.t_d;
            State::On {
                u: rest / self.n_levels + 1,
                level: rest % self.n_levels,
            }
        }
    }
}

/// Maximizes
///   sum_t [ lambda_t p_t + mu_t (P_max a_t - p_t)
///           - (C_nl a_t + C_mr p_t + C_up g_t) ]
/// over all schedules feasible for the generator with dispatch restricted to
/// `on_levels`, and returns the optimal value with one maximizing schedule.
/// The unit starts off with its minimum downtime already served.
pub fn solve_unit_dp(
    gen: &Generator,
    lambda: &[f64],
    mu: &[f64],
    on_levels: &[f64],
) -> (f64, UnitSchedule) {
    let n_t = lambda.len();
    assert_eq!(mu.len(), n_t);
    assert!(!on_levels.is_empty());
    let space = StateSpace {
        t_u: gen.t_u,
        t_d: gen.t_d,
        n_levels: on_levels.len(),
    };
    let n_states = space.len();

    // value[s] = best cumulative reward of any feasible prefix ending in s
    let mut value = vec![f64::NEG_INFINITY; n_states];
    value[space.index(State::Off { d: gen.t_d })] = 0.0;
    // parents[t][s] = (previous state index, started this period)
    let mut parents: Vec<Vec<(usize, bool)>> = Vec::with_capacity(n_t);

    let on_reward = |t: usize, level: usize, start: bool| -> f64 {
        let p = on_levels[level];
        lambda[t] * p + mu[t] * (gen.p_max - p)
            - (gen.c_nl + gen.c_mr * p + if start { gen.c_up } else { 0.0 })
    };

    for t in 0..n_t {
        let mut next = vec![f64::NEG_INFINITY; n_states];
        let mut parent = vec![(usize::MAX, false); n_states];
        let relax = |next: &mut Vec<f64>, parent: &mut Vec<(usize, bool)>,
                         to: State,
                         from_idx: usize,
                         reward: f64,
                         start: bool| {
            let v = value[from_idx] + reward;
            let ti = StateSpace::index(&space, to);
            if v > next[ti] {
                next[ti] = v;
                parent[ti] = (from_idx, start);
            }
        };

        for idx in 0..n_states {
            if value[idx] == f64::NEG_INFINITY {
                continue;
            }
            match space.state(idx) {
                State::Off { d } => {
                    // stay off
                    relax(
                        &mut next,
                        &mut parent,
                        State::Off {
                            d: (d + 1).min(gen.t_d),
                        },
                        idx,
                        0.0,
                        false,
                    );
                    // start up, limited by the startup ramp
                    if d >= gen.t_d {
                        for (level, &p) in on_levels.iter().enumerate() {
                            if p <= gen.p_su {
                                relax(
                                    &mut next,
                                    &mut parent,
                                    State::On { u: 1, level },
                                    idx,
                                    on_reward(t, level, true),
                                    true,
                                );
                            }
                        }
                    }
                }
                State::On { u, level } => {
                    let p_prev = on_levels[level];
                    // stay on within the operating ramps
                    for (next_level, &p) in on_levels.iter().enumerate() {
                        if p - p_prev <= gen.p_ru && p_prev - p <= gen.p_rd {
                            relax(
                                &mut next,
                                &mut parent,
                                State::On {
                                    u: (u + 1).min(gen.t_u),
                                    level: next_level,
                                },
                                idx,
                                on_reward(t, next_level, false),
                                false,
                            );
                        }
                    }
                    // shut down once the minimum uptime is served and the
                    // shutdown ramp admits the drop to zero
                    if u >= gen.t_u && p_prev <= gen.p_sd {
                        relax(&mut next, &mut parent, State::Off { d: 1 }, idx, 0.0, false);
                    }
                }
            }
        }
        value = next;
        parents.push(parent);
    }

    // best terminal state; ties go to the lowest state index
    let mut best_idx = 0;
    for idx in 1..n_states {
        if value[idx] > value[best_idx] {
            best_idx = idx;
        }
    }
    let best_value = value[best_idx];

    // backtrack
    let mut schedule = UnitSchedule::all_off(n_t);
    let mut idx = best_idx;
    for t in (0..n_t).rev() {
        let (prev_idx, started) = parents[t][idx];
        match space.state(idx) {
            State::Off { .. } => {
                // shutdown happened this period iff the previous state was on
                if prev_idx >= space.t_d && prev_idx != usize::MAX {
                    schedule.shutdown[t] = true;
                }
            }
            State::On { level, .. } => {
                schedule.on[t] = true;
                schedule.power[t] = on_levels[level];
                schedule.startup[t] = started;
            }
        }
        idx = prev_idx;
    }

    (best_value, schedule)
}
