//! Quadrature, potentials and constants against closed forms computed
//! independently here (Gamma functions from statrs).

use std::f64::consts::PI;
use std::sync::Arc;

use dualflow_core::constants::ConstantsTable;
use dualflow_core::profiles::{aubin_talenti, moon_measure};
use dualflow_core::radial::{
    dirichlet_energy_with_tail, integrate_with_tail, make_grid, newton_potential, RadialField, RadialGrid, Spacing,
    TailModel,
};
use dualflow_core::suite::{ccl_identity_check, explicit_gap_constant};
use statrs::function::gamma::gamma;

/// Sharp constant of `S ||grad u||^2 >= ||u||_{2d/(d-2)}^2`.
fn sobolev_oracle(d: usize) -> f64 {
    let df = d as f64;
    (gamma(df) / gamma(df / 2.0)).powf(2.0 / df) / (PI * df * (df - 2.0))
}

/// `int F^{2d/(d-2)} dx = pi^{d/2} Gamma(d/2) / Gamma(d)`.
fn critical_mass_oracle(d: usize) -> f64 {
    let df = d as f64;
    PI.powf(df / 2.0) * gamma(df / 2.0) / gamma(df)
}

fn constants_grid(d: usize) -> Arc<RadialGrid> {
    make_grid(d, 1e6, 4096, Spacing::LogStretched).unwrap()
}

#[test]
fn sobolev_constants_match_the_gamma_formula() {
    let table = ConstantsTable::default();
    for d in 3..=6 {
        let s = table.sobolev(d).unwrap();
        let oracle = sobolev_oracle(d);
        assert!(((s - oracle) / oracle).abs() < 1e-6, "d = {d}: {s} vs {oracle}");
    }
}

#[test]
fn optimizer_energy_and_norm() {
    for d in 3..=6 {
        let g = constants_grid(d);
        let df = d as f64;
        let f = RadialField::from_fn(g.clone(), |r| aubin_talenti(r, d)).unwrap();
        let mass = integrate_with_tail(&f.map(|x| x.powf(2.0 * df / (df - 2.0))).unwrap(), TailModel::Fitted).unwrap();
        let energy = dirichlet_energy_with_tail(&f, TailModel::Fitted).unwrap();
        let m = critical_mass_oracle(d);
        assert!(((mass - m) / m).abs() < 1e-6, "d = {d}: mass {mass} vs {m}");
        let e = df * (df - 2.0) * m;
        assert!(((energy - e) / e).abs() < 1e-6, "d = {d}: energy {energy} vs {e}");
    }
}

fn potential_error(d: usize, n: usize) -> f64 {
    let g = make_grid(d, 1e6, n, Spacing::LogStretched).unwrap();
    let df = d as f64;
    let rhs = RadialField::from_fn(g.clone(), |r| aubin_talenti(r, d).powf((df + 2.0) / (df - 2.0))).unwrap();
    let u = newton_potential(&rhs).unwrap();
    g.nodes()
        .iter()
        .zip(u.values())
        .filter(|(r, _)| **r <= 10.0)
        .map(|(r, v)| {
            let expected = aubin_talenti(*r, d) / (df * (df - 2.0));
            ((v - expected) / expected).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn newton_potential_inverts_the_optimizer_equation() {
    // -Delta F = d(d-2) F^{(d+2)/(d-2)}; cumulative trapezoid sums make the
    // potential second order.
    for d in [3, 5] {
        let coarse = potential_error(d, 2048);
        let fine = potential_error(d, 4096);
        assert!(fine < 1e-4, "d = {d}: {fine}");
        let order = (coarse / fine).log2();
        assert!(order > 1.8, "d = {d}: order {order}");
    }
}

#[test]
fn planar_potential_of_mu_is_logarithmic() {
    // -Delta [-(1/4 pi) log(1 + r^2)] = mu, vanishing at the origin.
    let g = constants_grid(2);
    let mu = RadialField::from_fn(g.clone(), moon_measure).unwrap();
    let u = newton_potential(&mu).unwrap();
    for (r, v) in g.nodes().iter().zip(u.values()) {
        if *r <= 100.0 {
            let expected = -(1.0 + r * r).ln() / (4.0 * PI);
            assert!((v - expected).abs() < 1e-6, "r = {r}: {v} vs {expected}");
        }
    }
}

#[test]
fn constant_identities_hold_in_low_dimensions() {
    let table = ConstantsTable::default();
    for d in 2..=5 {
        let r = ccl_identity_check(d, &table, 1e-5).unwrap();
        assert!(r.passed(), "d = {d}: residual {}", r.residual);
    }
}

#[test]
fn explicit_gap_constant_is_below_the_sobolev_constant_times_growth() {
    for d in 5..=8 {
        let s = sobolev_oracle(d);
        let c = explicit_gap_constant(d, s);
        let df = d as f64;
        assert!((c - (1.0 + 2.0 / df) * (1.0 - (-df / 2.0).exp()) * s).abs() < 1e-15);
        assert!(c < (1.0 + 2.0 / df) * s);
    }
}
