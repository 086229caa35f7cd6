//! Flow runs against exact solutions and conservation laws.

use dualflow_core::constants::ConstantsTable;
use dualflow_core::flow::scheme::StepControl;
use dualflow_core::flow::{
    ccl_flow_derivative_check, ccl_u_exponent, run_ccl_flow, run_flow, FlowParams, SobolevConstant,
};
use dualflow_core::logflow::{lemma_loghlsder_check, run_log_flow, stationarity_defect, LogFlowParams, MassOneDensity};
use dualflow_core::profiles::{
    aubin_talenti, bump, gn_optimizer, moon_measure, profile, sobolev_flow_exponent, ProfileSpec,
};
use dualflow_core::radial::{make_grid, RadialField, Spacing};

fn fd_params(d: usize) -> FlowParams {
    FlowParams::new(sobolev_flow_exponent(d), SobolevConstant::Realized)
}

#[test]
fn separated_solution_vanishes_at_its_final_time() {
    for (d, t_final, lambda) in [(3, 1.0, 1.0), (5, 1.0, 1.0), (5, 0.5, 1.0), (5, 1.0, 2.0)] {
        let grid = make_grid(d, 100.0, 512, Spacing::LogStretched).unwrap();
        let spec = ProfileSpec::separated(t_final, 0.0).with_lambda(lambda);
        let v0 = profile(&spec, &grid).unwrap();
        let trace = run_flow(&v0, &fd_params(d)).unwrap();
        let t_hat = trace.t_hat.expect("run reaches extinction");
        assert!(((t_hat - t_final) / t_final).abs() < 1e-2, "d = {d}, T = {t_final}, lambda = {lambda}: {t_hat}");
    }
}

#[test]
fn functional_increases_while_j_decreases() {
    let d = 5;
    let grid = make_grid(d, 100.0, 512, Spacing::LogStretched).unwrap();
    let v0 = RadialField::from_fn(grid, |r| {
        let q = (d as f64 + 2.0) / (d as f64 - 2.0);
        (aubin_talenti(r, d) + 0.3 * bump(r, 0.5)).powf(q)
    })
    .unwrap();
    let trace = run_flow(&v0, &fd_params(d)).unwrap();
    for w in trace.samples.windows(2) {
        assert!(w[1].j < w[0].j);
        assert!(w[1].h >= w[0].h - 1e-8 * trace.samples[0].h.abs());
    }
}

#[test]
fn log_flow_conserves_mass_and_keeps_mu() {
    let grid = make_grid(2, 1e4, 512, Spacing::LogStretched).unwrap();
    let params = LogFlowParams { t_end: 0.2, ..LogFlowParams::default() };

    let u = RadialField::from_fn(grid.clone(), |r| 0.8 * bump(r, 1.0)).unwrap();
    let trace = run_log_flow(&MassOneDensity::perturbed_moon(&u).unwrap(), &params).unwrap();
    assert!(trace.max_mass_drift() <= 1e-8);
    let first = trace.samples[0].h2;
    let last = trace.samples.last().unwrap().h2;
    assert!(first < 0.0 && last > first, "H_2 moves toward 0: {first} -> {last}");

    let mu = run_log_flow(&MassOneDensity::moon(&grid).unwrap(), &params).unwrap();
    assert!(stationarity_defect(&mu) <= 1e-10);
}

#[test]
fn ccl_flow_from_the_optimizer_has_vanishing_right_side() {
    for d in [2, 3] {
        let grid = make_grid(d, 1e4, 512, Spacing::LogStretched).unwrap();
        let df = d as f64;
        let q = if d == 2 { 3.0 } else { (df + 1.0) / (df - 1.0) };
        let e = 1.0 / ccl_u_exponent(d);
        let v0 = RadialField::from_fn(grid, |r| gn_optimizer(r, q).powf(e)).unwrap();
        let s = if d == 2 { 0.0 } else { ConstantsTable::default().sobolev(d).unwrap() };
        let trace = run_ccl_flow(&v0, StepControl::default(), 0.2, s).unwrap();
        let r = ccl_flow_derivative_check(&trace, 1e-2).unwrap();
        assert!(r.passed(), "d = {d}: {r:?}");
    }
}

/// `u = 2 log(mu_2 / mu)` makes both sides of the energy bound equal; the
/// first-order perturbation along `e^g - 1 - g e^g` moves the margin
/// linearly in `eps`, to either sign.
#[test]
fn energy_bound_fails_near_dilates_of_mu() {
    let grid = make_grid(2, 1e4, 1024, Spacing::LogStretched).unwrap();
    let lambda: f64 = 2.0;
    let g = |r: f64| (moon_measure(r / lambda) / (lambda * lambda) / moon_measure(r)).ln();
    let margin = |eps: f64| {
        let u = RadialField::from_fn(grid.clone(), |r| {
            let g = g(r);
            2.0 * g - eps * (g.exp() - 1.0 - g * g.exp())
        })
        .unwrap();
        lemma_loghlsder_check(&u, 1e-8).unwrap().quantities["margin"]
    };
    let at_dilate = margin(0.0);
    assert!(at_dilate.abs() < 1e-6, "equality at the dilate: {at_dilate}");
    let below = margin(1e-2);
    let above = margin(-1e-2);
    assert!(below < -5e-4, "margin {below}");
    assert!(above > 5e-4, "margin {above}");
    // Linear response: the two sides mirror each other.
    assert!(((below + above) / (above - below)).abs() < 0.05);
}
