//! The fast diffusion flow `v_t = Delta v^m` in radial symmetry.

mod ccl;
mod checks;
mod functionals;
mod run;
pub mod scheme;

pub use ccl::{
    ccl_boundary, ccl_exponent, ccl_flow_derivative_check, ccl_sample, ccl_u_exponent, run_ccl_flow, CclSample, CclTrace,
};
pub use checks::{
    decay_bounds_check, hd_derivative_check, hd_monotonicity_check, interior_derivative, kappa, kappa_check,
    second_derivative_check, separated_extinction_check, trace_kappa, vanishing_profile_diagnostic,
    vanishing_profile_report, VanishingSample, MIN_SAMPLES,
};
pub use functionals::{functionals, FunctionalSample, FvFunctionals, K_MASK_THRESHOLD};
pub use run::{
    default_boundary, extrapolate_extinction, run_flow, run_flow_with, FlowParams, SobolevConstant, FlowTrace, Snapshot, Termination,
    EXTINCTION_FIT_SAMPLES,
};
