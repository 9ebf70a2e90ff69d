//! Seeded synthetic instance generation.
//!
//! Generator parameters are drawn from the fixed plausible ranges below and
//! demand follows a daily sinusoidal shape with seeded noise, scaled so the
//! fleet capacity covers 1.3x the peak. Reserve is 10% of demand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Generator, UcInstance};

// Parameter ranges (MW, currency). Documented here as the generation defaults.
const P_MIN_RANGE: (f64, f64) = (20.0, 80.0);
const P_MAX_FACTOR: (f64, f64) = (1.8, 3.5);
const C_NL_RANGE: (f64, f64) = (200.0, 800.0);
const C_MR_RANGE: (f64, f64) = (5.0, 40.0);
const C_UP_RANGE: (f64, f64) = (400.0, 3000.0);
const RAMP_FACTOR: (f64, f64) = (0.25, 0.6); // of (p_max - p_min), per period
const SU_FACTOR: (f64, f64) = (1.0, 1.6); // of p_min, clamped to p_max
const MIN_UPDOWN: (usize, usize) = (1, 4);
const CAPACITY_MARGIN: f64 = 1.3;
const RESERVE_FRACTION: f64 = 0.1;

pub fn generate_instance(seed: u64, n_g: usize, n_t: usize) -> UcInstance {
    assert!(n_g >= 1 && n_t >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let generators: Vec<Generator> = (0..n_g)
        .map(|_| {
            let p_min = rng.gen_range(P_MIN_RANGE.0..P_MIN_RANGE.1);
            let p_max = p_min * rng.gen_range(P_MAX_FACTOR.0..P_MAX_FACTOR.1);
            let span = p_max - p_min;
            let p_su = (p_min * rng.gen_range(SU_FACTOR.0..SU_FACTOR.1)).min(p_max);
            let p_sd = (p_min * rng.gen_range(SU_FACTOR.0..SU_FACTOR.1)).min(p_max);
            Generator {
                c_nl: rng.gen_range(C_NL_RANGE.0..C_NL_RANGE.1),
                c_mr: rng.gen_range(C_MR_RANGE.0..C_MR_RANGE.1),
                c_up: rng.gen_range(C_UP_RANGE.0..C_UP_RANGE.1),
                p_min,
                p_max,
                p_ru: span * rng.gen_range(RAMP_FACTOR.0..RAMP_FACTOR.1),
                p_rd: span * rng.gen_range(RAMP_FACTOR.0..RAMP_FACTOR.1),
                p_su,
                p_sd,
                t_u: rng.gen_range(MIN_UPDOWN.0..=MIN_UPDOWN.1),
                t_d: rng.gen_range(MIN_UPDOWN.0..=MIN_UPDOWN.1),
            }
        })
        .collect();

    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();
    let base = 0.55 * capacity;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut demand: Vec<f64> = (0..n_t)
        .map(|t| {
            let daily =
                (std::f64::consts::TAU * t as f64 / 24.0 - phase).sin();
            let noise = rng.gen_range(-0.05..0.05);
            (base * (1.0 + 0.3 * daily + noise)).max(0.05 * capacity)
        })
        .collect();
    let peak = demand.iter().cloned().fold(0.0, f64::max);
    if CAPACITY_MARGIN * peak > capacity {
        let scale = capacity / (CAPACITY_MARGIN * peak);
        for d in &mut demand {
            *d *= scale;
        }
    }
    let reserve: Vec<f64> = demand.iter().map(|d| RESERVE_FRACTION * d).collect();

    let instance = UcInstance {
        n_g,
        n_t,
        generators,
        demand,
        reserve,
    };
    debug_assert!(instance.validate().is_ok());
    instance
}
