//! Radial grids, fields and operators on `R^d`.

mod field;
pub mod fv;
mod grid;
pub mod io;
mod ops;

pub use field::RadialField;
pub use fv::{Boundary, FvOperator};
pub use grid::{make_grid, sphere_area, RadialGrid, Spacing, MIN_NODES};
pub use ops::{
    cumulative_mass, dirichlet_energy, dirichlet_energy_with_tail, dirichlet_form,
    fitted_decay_exponent, integrate, integrate_with_tail, l2_norm, lp_norm, lp_norm_with_tail,
    newton_potential, radial_derivative, radial_laplacian, sup_weighted_norm,
    sup_weighted_norm_with_exponent, TailModel, TAIL_MASS_WARNING,
};
