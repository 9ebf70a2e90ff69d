//! Cut/bundle data model, the feasible box and window bookkeeping.

use crate::vecmath::{all_finite, dot};
use crate::Error;

/// Memory window: cuts older than `W` iterations are dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Finite(usize),
    Infinite,
}

impl Window {
    /// Whether a cut born at `birth` is still inside the window at iteration `k`.
    pub fn keeps(self, k: usize, birth: usize) -> bool {
        match self {
            Window::Infinite => true,
            // birth >= k - W + 1
            Window::Finite(w) => birth + w >= k + 1,
        }
    }

    pub fn as_finite(self) -> Option<usize> {
        match self {
            Window::Finite(w) => Some(w),
            Window::Infinite => None,
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Window::Finite(w) => write!(f, "{w}"),
            Window::Infinite => write!(f, "inf"),
        }
    }
}

/// One affine minorant of one component: x -> gradient . x + intercept.
#[derive(Clone, Debug)]
pub struct Cut {
    pub component: usize,
    pub birth_iter: usize,
    pub gradient: Vec<f64>,
    pub intercept: f64,
}

impl Cut {
    /// Builds a cut from one oracle evaluation `(value, gradient)` at `x`,
    /// so that the cut reproduces `value` at `x` exactly.
    pub fn from_evaluation(
        component: usize,
        x: &[f64],
        value: f64,
        gradient: Vec<f64>,
        birth_iter: usize,
    ) -> Result<Cut, Error> {
        if !value.is_finite() {
            return Err(Error::NonFinite("cut value"));
        }
        if !all_finite(&gradient) || gradient.len() != x.len() {
            return Err(Error::NonFinite("cut gradient"));
        }
        let intercept = value - dot(&gradient, x);
        Ok(Cut {
            component,
            birth_iter,
            gradient,
            intercept,
        })
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        dot(&self.gradient, x) + self.intercept
    }
}

/// Per-component sliding-window cut set. Cuts are kept in birth order.
#[derive(Clone, Debug, Default)]
pub struct Bundle {
    pub component: usize,
    pub cuts: Vec<Cut>,
}

impl Bundle {
    pub fn new(component: usize) -> Bundle {
        Bundle {
            component,
            cuts: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn push(&mut self, cut: Cut) {
        debug_assert_eq!(cut.component, self.component);
        debug_assert!(self
            .cuts
            .last()
            .map_or(true, |c| c.birth_iter <= cut.birth_iter));
        self.cuts.push(cut);
    }

    /// Drops cuts that fell out of the window at iteration `k`. Returns the
    /// number of removed cuts. Idempotent; removals are a prefix since cuts
    /// are stored in birth order.
    pub fn prune(&mut self, k: usize, window: Window) -> usize {
        let keep_from = self
            .cuts
            .iter()
            .position(|c| window.keeps(k, c.birth_iter))
            .unwrap_or(self.cuts.len());
        self.cuts.drain(..keep_from);
        keep_from
    }

    /// Pointwise max of the retained cuts; 0 when the bundle is empty.
    pub fn model_value(&self, x: &[f64]) -> f64 {
        if self.cuts.is_empty() {
            return 0.0;
        }
        self.cuts
            .iter()
            .map(|c| c.value_at(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The window set B_{k,i}: lags l with 0 <= l <= min(k, W-1) whose iteration
/// k-l evaluated component i. `history[j]` is the batch I_j, so the history
/// must cover iterations 0..=k.
pub fn window_set(
    k: usize,
    component: usize,
    window: Window,
    history: &[Vec<usize>],
) -> Vec<usize> {
    debug_assert!(history.len() > k);
    let max_lag = match window {
        Window::Infinite => k,
        Window::Finite(w) => k.min(w.saturating_sub(1)),
    };
    (0..=max_lag)
        .filter(|l| history[k - l].contains(&component))
        .collect()
}

/// Axis-aligned box, possibly unbounded on either side.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<BoxSet, Error> {
        if lower.len() != upper.len() {
            return Err(Error::Config("box bound dimensions differ".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(Error::Config("box requires lower <= upper".into()));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn full_space(n: usize) -> BoxSet {
        BoxSet {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn nonneg_orthant(n: usize) -> BoxSet {
        BoxSet {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Euclidean projection: componentwise clamp.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| x.max(*l).min(*u))
            .collect()
    }

    pub fn project_into(&self, v: &mut [f64]) {
        for (x, (l, u)) in v.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.max(*l).min(*u);
        }
    }
}
