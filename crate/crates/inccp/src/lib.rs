//! Incremental limited-memory regularized cutting-plane solver.
//!
//! Minimizes a sum of convex component functions over a box by maintaining a
//! sliding-window piecewise affine model per component and solving a
//! proximally regularized master problem each iteration. Only a subset of the
//! components is evaluated per iteration, which makes the method cheap when
//! the component count is large. The `uc` module builds such problems from
//! Lagrangian duals of unit-commitment instances.

pub mod experiment;
pub mod master;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod solver;
pub mod uc;
pub mod vecmath;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("point outside the feasible set")]
    OutsideDomain,
    #[error(
        "master problem not certified: gap {residual:.3e} > tol {tol:.3e} after {sweeps} sweeps"
    )]
    MasterNotCertified {
        residual: f64,
        tol: f64,
        sweeps: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
