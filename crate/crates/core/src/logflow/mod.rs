//! The two-dimensional side: the probability measure
//! `d mu = dx / (pi (1 + |x|^2)^2)`, the Onofri and logarithmic HLS
//! inequalities, their Legendre duality, the flow `v_t = Delta log(v/mu)`
//! and the exponential-moment curve `h(t) = log int e^{tu} d mu`.

mod deficits;
mod flow;
mod moments;

pub use deficits::{compute_h2, legendre_gap, loghls_deficit, onofri_deficit, MassOneDensity, MuWeights, OnofriInput};
pub use flow::{
    h2_derivative_check, h2_monotonicity_check, moon_eigenvalue, run_log_flow, stationarity_defect, EntropyWeight, LogFlowParams,
    LogSample, LogTrace,
};
pub use moments::{
    exp_moment_curve, exp_moment_curve_check, failed_scheme_probe, lemma_loghlsder_check, normalize_exp_moment, onofri_limit_quotient,
    onofri_limit_value, ExpMomentCurve, ProbeValues,
};
