//! Checks that combine flows and functionals into pass/fail reports, and
//! the registries the command line dispatches through.

mod config;
mod deficits;
mod family;
mod flows;
mod gap;
mod registry;

pub use config::{default_r_max, SuiteConfig, Tolerances, DEFAULT_TOLERANCES};
pub use deficits::{ccl_identity_check, critical_norm_sq, hls_deficit, hls_power, hls_terms, sobolev_deficit};
pub use family::{perturbation_family, plane_bumps, Perturbation, PlaneBump, FLOW_DATA, LATTICE_EPS, LATTICE_R0};
pub use flows::{
    find_flow, flow_grid, flow_registry, initial_datum, CclFlow, FastDiffusion, Flow, FlowOutput, FlowSummary, LogFlow,
    T_END,
};
pub use gap::{
    explicit_gap_check, explicit_gap_constant, explicit_gap_terms, gap_integrals, theorem_gap_check, ExplicitGap,
    GapIntegrals, NULL_SIDE,
};
pub use registry::{
    check_names, check_registry, run_suite, Check, FnCheck, SuiteContext, LOG_FLOW_DATA, ONOFRI_P, PLANE_SAMPLES,
    RESIDUAL_R_MAX,
};
