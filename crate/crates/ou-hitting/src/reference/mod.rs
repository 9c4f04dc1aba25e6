//! Independent oracles: a Crank-Nicolson solver for the backward PDE, the
//! Gaver-Stehfest Laplace inversion of the parabolic-cylinder transform in
//! arbitrary precision, and an exact-transition Monte Carlo simulator.
//!
//! These share no code with the heat-potential pipelines and exist to
//! cross-check them.

mod crank_nicolson;
mod monte_carlo;
mod stehfest;

pub use crank_nicolson::{crank_nicolson_cdf, CnTable, CNConfig};
pub use monte_carlo::{mc_hitting_cdf, MCConfig, McCdf};
pub use stehfest::{
    gaver_stehfest_density, invert_laplace, laplace_u, parabolic_cylinder_d,
    stehfest_weights_rational, StehfestConfig,
};
