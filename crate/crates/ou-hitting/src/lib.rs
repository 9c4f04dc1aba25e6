//! First-passage-time densities of an Ornstein-Uhlenbeck process.
//!
//! The process `dX = -X dt + dW` started at `z` is absorbed the first time it
//! reaches a constant barrier `b < z`. Both the forward (Fokker-Planck) and
//! backward (Kolmogorov) formulations reduce, after a change of variables, to
//! a heat equation with a moving square-root boundary. The method of heat
//! potentials turns each into a linear Volterra integral equation of the
//! second kind with a weakly singular kernel; the hitting density `g(t)` and
//! cumulative probability `G(t)` are then assembled from the solved boundary
//! weight function.
//!
//! Module layout:
//! - [`model`]: parameter normalization and the coordinate maps between
//!   `t`, `tau`, `theta`, `lambda` and `vartheta`.
//! - [`closedform`]: exact `b = 0` solutions and the (incorrect for `b != 0`)
//!   Leblanc formulas kept as comparison baselines.
//! - [`kernels`]: the forward/backward heat-potential kernels and forcings.
//! - [`volterra`]: generic solvers for `f = g + ∫ K/sqrt(t-s) f ds`
//!   (product trapezoidal and block-by-block quadratic), the Abel-equation
//!   closed forms and the Abel resolvent.
//! - [`density`]: assembly of `g(t)` and `G(t)` from weight functions, plus
//!   expected hitting times.
//! - [`reference`]: independent oracles (Crank-Nicolson, Gaver-Stehfest with
//!   arbitrary-precision parabolic cylinder functions, Monte Carlo).

pub mod closedform;
pub mod density;
pub mod kernels;
pub mod model;
pub mod reference;
pub mod volterra;

use thiserror::Error;

/// Scalar type used by the concrete (non-generic) modules.
pub type Real = f64;

/// Weight function sampled on an `f64` grid, the common instantiation of the
/// generic Volterra machinery.
pub type WeightFn = volterra::WeightFunction<Real>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("start coincides with the barrier (hitting time is identically zero)")]
    ImmediateHit,
    #[error("coordinate corresponds to infinite time (vartheta >= 1)")]
    InfiniteTime,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver breakdown at node {node}: diagonal factor {factor:e}")]
    SolverBreakdown { node: usize, factor: f64 },
    #[error("block scheme requires an even number of steps, got {0}")]
    OddGrid(usize),
    #[error("requested grid spacing {requested:e} is finer than the solved weight grid {available:e}")]
    RequiresDenseGrid { requested: f64, available: f64 },
    #[error("quadrature could not reach the requested precision ({digits} digits)")]
    PrecisionExhausted { digits: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
