//! Component-function evaluation interface and synthetic test problems.

use crate::model::BoxSet;
use crate::vecmath::norm;
use crate::Error;

/// One convex summand of the objective. Evaluation returns the value and one
/// subgradient, deterministically: the same point always yields the same
/// subgradient. At kinks of piecewise-linear functions the tied piece with the
/// lowest index wins (for |.| this means sign(0) = +1).
pub trait ComponentOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>);
    /// Declared bound C with ||g|| <= C on the feasible set, when known.
    fn subgradient_bound(&self) -> Option<f64> {
        None
    }
}

/// A sum-of-components problem over a box.
pub struct Problem {
    pub components: Vec<Box<dyn ComponentOracle>>,
    pub set: BoxSet,
}

impl Problem {
    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// Checked evaluation of component `i`; the point must lie in the set.
    pub fn evaluate(&self, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>), Error> {
        if !self.set.contains(x) {
            return Err(Error::OutsideDomain);
        }
        Ok(self.components[i].evaluate(x))
    }

    /// Full objective value, summed in component-index order.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|c| c.evaluate(x).0).sum()
    }

    /// Max of the components' declared subgradient bounds, if all declare one.
    pub fn subgradient_bound(&self) -> Option<f64> {
        self.components
            .iter()
            .map(|c| c.subgradient_bound())
            .try_fold(0.0_f64, |acc, b| b.map(|v| acc.max(v)))
    }
}

/// A problem with a known optimal value (and minimizer, when analytic).
pub struct SyntheticProblem {
    pub problem: Problem,
    pub f_star: f64,
    pub minimizer: Option<Vec<f64>>,
}

/// f(x) = ||x - center||_1 with subgradient sign convention sign(0) = +1.
pub struct AbsDeviation {
    pub center: Vec<f64>,
}

impl ComponentOracle for AbsDeviation {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = Vec::with_capacity(x.len());
        for (xi, ci) in x.iter().zip(&self.center) {
            value += (xi - ci).abs();
            grad.push(if xi >= ci { 1.0 } else { -1.0 });
        }
        (value, grad)
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some((self.center.len() as f64).sqrt())
    }
}

/// f(x) = max over pieces of (a . x + c); ties resolved to the lowest index.
pub struct MaxAffine {
    pub pieces: Vec<(Vec<f64>, f64)>,
}

impl MaxAffine {
    pub fn affine(gradient: Vec<f64>, offset: f64) -> MaxAffine {
        MaxAffine {
            pieces: vec![(gradient, offset)],
        }
    }

    pub fn zero(n: usize) -> MaxAffine {
        MaxAffine::affine(vec![0.0; n], 0.0)
    }
}

impl ComponentOracle for MaxAffine {
    fn dim(&self) -> usize {
        self.pieces[0].0.len()
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (idx, (a, c)) in self.pieces.iter().enumerate() {
            let v = crate::vecmath::dot(a, x) + c;
            if v > best_val {
                best_val = v;
                best = idx;
            }
        }
        (best_val, self.pieces[best].0.clone())
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(
            self.pieces
                .iter()
                .map(|(a, _)| norm(a))
                .fold(0.0, f64::max),
        )
    }
}

/// Builds the sum-of-l1-deviations problem `f(x) = sum_i ||x - c_i||_1`.
/// The optimal value comes from the componentwise median when the set is all
/// of R^n, otherwise from a refined grid search (small dimensions only).
pub fn make_abs_problem(centers: Vec<Vec<f64>>, set: BoxSet) -> SyntheticProblem {
    assert!(!centers.is_empty());
    let n = set.dim();
    assert!(centers.iter().all(|c| c.len() == n));

    let unconstrained = set
        .lower()
        .iter()
        .all(|l| *l == f64::NEG_INFINITY)
        && set.upper().iter().all(|u| *u == f64::INFINITY);

    let (f_star, minimizer) = if unconstrained {
        let med = componentwise_median(&centers);
        let f = abs_objective(&centers, &med);
        (f, Some(med))
    } else {
        let x = grid_minimize_abs(&centers, &set);
        (abs_objective(&centers, &x), Some(x))
    };

    let components: Vec<Box<dyn ComponentOracle>> = centers
        .into_iter()
        .map(|center| Box::new(AbsDeviation { center }) as Box<dyn ComponentOracle>)
        .collect();
    SyntheticProblem {
        problem: Problem { components, set },
        f_star,
        minimizer,
    }
}

pub fn abs_objective(centers: &[Vec<f64>], x: &[f64]) -> f64 {
    centers
        .iter()
        .map(|c| c.iter().zip(x).map(|(ci, xi)| (xi - ci).abs()).sum::<f64>())
        .sum()
}

fn componentwise_median(centers: &[Vec<f64>]) -> Vec<f64> {
    let n = centers[0].len();
    (0..n)
        .map(|j| {
            let mut col: Vec<f64> = centers.iter().map(|c| c[j]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            col[(col.len() - 1) / 2]
        })
        .collect()
}

/// Coordinate-separable exact minimization of the l1 sum over a box: per
/// coordinate the objective is piecewise linear, minimized at the clamped
/// median.
fn grid_minimize_abs(centers: &[Vec<f64>], set: &BoxSet) -> Vec<f64> {
    let med = componentwise_median(centers);
    set.project(&med)
}
