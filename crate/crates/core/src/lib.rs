//! Radial fast-diffusion flows and numerical checks of the Sobolev,
//! Hardy-Littlewood-Sobolev and Onofri inequalities along them.
//!
//! * [`radial`]: grids, quadrature, Laplacian and Newton potential for
//!   radially symmetric functions on `R^d`.
//! * [`profiles`] and [`constants`]: closed-form optimizers and the optimal
//!   constants computed from them.
//! * [`flow`]: the fast diffusion flow `v_t = Delta v^m` and its functionals.
//! * [`logflow`]: the two-dimensional logarithmic flow and the Onofri /
//!   log-HLS side.
//! * [`suite`]: checks that combine the above into pass/fail reports.

pub mod constants;
pub mod error;
pub mod flow;
pub mod logflow;
pub mod profiles;
pub mod report;
pub mod radial;
pub mod suite;
pub mod tridiag;

pub use error::{Error, Result};
