//! Evaluation schedules {I_k} and step-size rules {t_k}.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Identity permutation every pass.
    Cyclic,
    /// Fresh seeded shuffle every pass.
    Shuffled,
}

impl std::fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleMode::Cyclic => write!(f, "cyclic"),
            ScheduleMode::Shuffled => write!(f, "shuffled"),
        }
    }
}

/// Permutation-stream schedule: every `m` consecutive stream elements are a
/// permutation of the component indices and each batch takes the next `p`.
pub struct Schedule {
    m: usize,
    p: usize,
    mode: ScheduleMode,
    seed: u64,
    queue: VecDeque<usize>,
    pass: u64,
}

impl Schedule {
    pub fn new(m: usize, p: usize, mode: ScheduleMode, seed: u64) -> Result<Schedule, Error> {
        if m == 0 || p == 0 || p > m {
            return Err(Error::Config(format!(
                "batch size must satisfy 1 <= p <= m (got p={p}, m={m})"
            )));
        }
        Ok(Schedule {
            m,
            p,
            mode,
            seed,
            queue: VecDeque::new(),
            pass: 0,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.p
    }

    fn refill(&mut self) {
        let mut perm: Vec<usize> = (0..self.m).collect();
        if self.mode == ScheduleMode::Shuffled {
            let mut rng = ChaCha8Rng::seed_from_u64(
                self.seed ^ self.pass.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            perm.shuffle(&mut rng);
        }
        self.queue.extend(perm);
        self.pass += 1;
    }

    /// Next batch I_k, sorted ascending. Batches may cross a permutation
    /// boundary when p does not divide m.
    pub fn next_batch(&mut self) -> Vec<usize> {
        while self.queue.len() < self.p {
            self.refill();
        }
        let mut batch: Vec<usize> = self.queue.drain(..self.p).collect();
        batch.sort_unstable();
        batch
    }
}

/// Smallest window compatible with a permutation schedule: a component's gap
/// between consecutive evaluations can reach 2m/p - 1 iterations across a
/// shuffled permutation boundary.
pub fn required_window(m: usize, p: usize) -> usize {
    (2 * m).div_ceil(p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSizeRule {
    Constant(f64),
    /// t_k = t0 / (k + 1); t0 for k < 0.
    Harmonic(f64),
}

impl StepSizeRule {
    /// Constant rule given the adjusted step size t~ = m t / p.
    pub fn constant_adjusted(t_adjusted: f64, p: usize, m: usize) -> StepSizeRule {
        StepSizeRule::Constant(adjusted_to_actual(t_adjusted, p, m))
    }

    /// Negative k is allowed and returns t0 (the convention used by the
    /// distance estimates for pre-history indices).
    pub fn step(&self, k: i64) -> f64 {
        match *self {
            StepSizeRule::Constant(t) => t,
            StepSizeRule::Harmonic(t0) => {
                if k < 0 {
                    t0
                } else {
                    t0 / (k as f64 + 1.0)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let t0 = match *self {
            StepSizeRule::Constant(t) | StepSizeRule::Harmonic(t) => t,
        };
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::Config("step size must be positive".into()));
        }
        Ok(())
    }
}

/// t = t~ p / m.
pub fn adjusted_to_actual(t_adjusted: f64, p: usize, m: usize) -> f64 {
    t_adjusted * p as f64 / m as f64
}
