//! The exponential-moment curve `h(t) = log int e^{tu} d mu`, the
//! inequality `(1/16 pi) int |grad u|^2 >= int (e^{u/2} - 1) u d mu` under
//! `int e^{u/2} d mu = 1`, the Onofri inequality as a limit of
//! Gagliardo-Nirenberg quotients, and the quantities behind the failed
//! entropy-method attempt for the logarithmic flow.
//!
//! Derivatives of `h` are cumulants of `u` under `d nu_t = e^{tu} d mu / int e^{tu} d mu`:
//! `h'` is the mean, `h''` the variance and `h'''` the third central moment.
//! Finite differences of the sampled curve are kept as a cross-check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{gn_constant, gn_quotient};
use crate::error::{Error, Result};
use crate::flow::interior_derivative;
use crate::logflow::deficits::{MuWeights, OnofriInput};
use crate::profiles::{gn_optimizer, moon_measure};
use crate::radial::{dirichlet_energy_with_tail, integrate, radial_laplacian, RadialField, TailModel};
use crate::report::{CheckReport, RunMeta};

/// Shifts `u` by the constant `c` that makes `int e^{(u+c)/2} d mu = 1`.
/// Returns the shifted function and `c`.
pub fn normalize_exp_moment(u: &RadialField) -> Result<(RadialField, f64)> {
    let mu = MuWeights::new(u.grid())?;
    let half: Vec<f64> = u.values().iter().map(|x| 0.5 * x).collect();
    let shift = -2.0 * mu.log_integral_exp(&half);
    if !shift.is_finite() {
        return Err(Error::Domain("cannot normalize: int e^{u/2} d mu is not finite".into()));
    }
    Ok((u.map(|x| x + shift)?, shift))
}

/// `h` and its first three derivatives sampled on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentCurve {
    /// Constant added to `u` to normalize it.
    pub shift: f64,
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    /// Largest gap between the cumulants and finite differences of the
    /// sampled `h` (first, second, third derivative), relative to the
    /// largest cumulant of that order.
    pub fd_mismatch: [f64; 3],
}

impl ExpMomentCurve {
    /// Index of `t = 1/2`.
    pub fn half(&self) -> usize {
        (self.t.len() - 1) / 2
    }
}

/// Samples `h` for the normalized `u` at `n_t` uniform points of `[0, 1]`;
/// `n_t` must be odd so that `t = 1/2` is a sample.
pub fn exp_moment_curve(u: &RadialField, n_t: usize) -> Result<ExpMomentCurve> {
    if n_t < 5 || n_t % 2 == 0 {
        return Err(Error::Domain(format!("need an odd number of at least 5 samples, got {n_t}")));
    }
    let (u, shift) = normalize_exp_moment(u)?;
    let mu = MuWeights::new(u.grid())?;
    let uv = u.values();
    let t: Vec<f64> = (0..n_t).map(|k| k as f64 / (n_t - 1) as f64).collect();
    let (mut h, mut h1, mut h2, mut h3) = (vec![], vec![], vec![], vec![]);
    for &tk in &t {
        let a: Vec<f64> = uv.iter().map(|x| tk * x).collect();
        let top = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = a.iter().map(|x| (x - top).exp()).collect();
        let z = mu.integrate(&e);
        let moment = |f: &dyn Fn(f64) -> f64| -> f64 {
            mu.weights().iter().zip(&e).zip(uv).map(|((w, e), x)| w * e * f(*x)).sum::<f64>() / z
        };
        let mean = moment(&|x| x);
        h.push(top + z.ln());
        h1.push(mean);
        h2.push(moment(&|x| (x - mean).powi(2)));
        h3.push(moment(&|x| (x - mean).powi(3)));
    }
    let fd1 = interior_derivative(&t, &h);
    let fd2 = interior_derivative(&t, &h1);
    let fd3 = interior_derivative(&t, &h2);
    let rel = |fd: &[f64], exact: &[f64]| {
        let inner = &exact[1..exact.len() - 1];
        let size = exact.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        fd.iter().zip(inner).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / size
    };
    let fd_mismatch = [rel(&fd1, &h1), rel(&fd2, &h2), rel(&fd3, &h3)];
    Ok(ExpMomentCurve { shift, t, h, h1, h2, h3, fd_mismatch })
}

/// `h(0) = h(1/2) = 0` within `1e-10`, and `h'' >= -tol`, `h''' >= -tol`
/// on the sampled interval.
pub fn exp_moment_curve_check(u: &RadialField, n_t: usize, tol: f64) -> Result<CheckReport> {
    let c = exp_moment_curve(u, n_t)?;
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let ends = c.h[0].abs().max(c.h[c.half()].abs());
    let min_h2 = min(&c.h2);
    let min_h3 = min(&c.h3);
    let g = u.grid();
    Ok(CheckReport::graded(
        "exp_moment_curve",
        "convexity of the exponential-moment curve and of its derivative",
        (-min_h2).max(-min_h3).max(0.0),
        tol,
    )
    .with("h_zero", c.h[0])
    .with("h_half", c.h[c.half()])
    .with("min_h_second", min_h2)
    .with("min_h_third", min_h3)
    .with("fd_mismatch_third", c.fd_mismatch[2])
    .with("shift", c.shift)
    .with_meta(RunMeta { n: g.len(), r_max: g.r_max(), dt: 0.0 })
    .require(ends <= 1e-10, "h(0) = h(1/2) = 0")
    .require(min_h2 >= -tol, "h'' >= 0"))
}

/// Both sides of `(1/16 pi) int |grad u|^2 >= int (e^{u/2} - 1) u d mu` for
/// `u` normalized by [`normalize_exp_moment`], graded by the relative
/// violation. Also evaluates the step `h(1) >= h'(1/2)`, that is
/// `log int e^u d mu >= int u e^{u/2} d mu`, used to derive it.
pub fn lemma_loghlsder_check(u: &RadialField, tol: f64) -> Result<CheckReport> {
    let (u, shift) = normalize_exp_moment(u)?;
    let mu = MuWeights::new(u.grid())?;
    let uv = u.values();
    let lhs = dirichlet_energy_with_tail(&u, TailModel::None)? / (16.0 * PI);
    let rhs = mu.integrate(&uv.iter().map(|x| ((0.5 * x).exp() - 1.0) * x).collect::<Vec<_>>());
    let h_one = mu.log_integral_exp(uv);
    let h_prime_half = mu.integrate(&uv.iter().map(|x| x * (0.5 * x).exp()).collect::<Vec<_>>());
    let margin = lhs - rhs;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    let claim = h_one - h_prime_half;
    let g = u.grid();
    Ok(CheckReport::graded(
        "loghls_derivative_lemma",
        "lower bound on the Dirichlet energy under the exponential normalization",
        (-margin).max(0.0) / scale,
        tol,
    )
    .with("lhs", lhs)
    .with("rhs", rhs)
    .with("margin", margin)
    .with("shift", shift)
    .with("h_one", h_one)
    .with("h_prime_half", h_prime_half)
    .with("h_one_minus_h_prime_half", claim)
    .with_meta(RunMeta { n: g.len(), r_max: g.r_max(), dt: 0.0 })
    .require(claim >= -1e-8, "h(1) >= h'(1/2)"))
}

/// `exp((1/16 pi) int |grad g|^2) / int e^g d mu` for `g` shifted to mean
/// zero: the value the quotients of [`onofri_limit_quotient`] tend to.
pub fn onofri_limit_value(g: &OnofriInput) -> Result<f64> {
    let g = g.centered()?;
    Ok((g.energy / (16.0 * PI) - g.log_exp_moment).exp())
}

/// `(C_{p,2} ||grad f||^theta ||f||_{p+1}^{1-theta} / ||f||_{2p})^{2p}` at
/// `f = F_p (1 + g/(2p))`, with `g` shifted to mean zero.
///
/// The power `2p` turns the quotient into
/// `(int |grad f|^2 / int |grad F_p|^2)^{(p-1)/2} (int f^{p+1} / int F_p^{p+1}) / (int f^{2p} / int F_p^{2p})`,
/// which tends to [`onofri_limit_value`]; the quotient itself tends to 1.
/// `C_{p,2}` is the quotient at `F_p` on the grid of `g`, so that `g = 0`
/// gives exactly 1.
pub fn onofri_limit_quotient(g: &OnofriInput, p: f64) -> Result<f64> {
    let g = g.centered()?;
    let grid = g.g.grid().clone();
    if g.g.values().iter().any(|x| 1.0 + x / (2.0 * p) <= 0.0) {
        return Err(Error::Domain(format!("1 + g/(2p) changes sign at p = {p}; use a larger p")));
    }
    let f = g.g.map_with_r(|r, x| gn_optimizer(r, p) * (1.0 + x / (2.0 * p)))?;
    let c = gn_constant(p, 2, &grid)?;
    Ok((c / gn_quotient(&f, p)?).powf(2.0 * p))
}

/// The functional `J = int e^{u/2} (u - 2) d mu` of the logarithmic flow
/// written for `u = 2 log(v/mu)`, with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeValues {
    pub j: f64,
    /// `-(1/2) int |grad u|^2`.
    pub j1: f64,
    /// `int (Delta u)^2 e^{-u/2} dx / mu`.
    pub j2: f64,
    /// `int u^2 e^{u/2} d mu`.
    pub middle: f64,
}

impl ProbeValues {
    pub fn new(u: &RadialField) -> Result<Self> {
        let grid = u.grid().clone();
        let mu = MuWeights::new(&grid)?;
        let uv = u.values();
        let j = mu.integrate(&uv.iter().map(|x| (0.5 * x).exp() * (x - 2.0)).collect::<Vec<_>>());
        let j1 = -0.5 * dirichlet_energy_with_tail(u, TailModel::None)?;
        let lap = radial_laplacian(u)?;
        let j2 = integrate(&lap.zip_map(u, |l, x| l * l * (-0.5 * x).exp())?.map_with_r(|r, y| y / moon_measure(r))?);
        let middle = mu.integrate(&uv.iter().map(|x| x * x * (0.5 * x).exp()).collect::<Vec<_>>());
        Ok(Self { j, j1, j2, middle })
    }
}

/// `4 J'^2 <= J'' int u^2 e^{u/2} d mu` (graded), for `u` normalized by
/// [`normalize_exp_moment`] (i.e. `v = mu e^{u/2}` of unit mass). Reported
/// only: the ratio `4 J'^2 / (J J'')` and `int u^2 e^{u/2} d mu / |J|`, the
/// factor a bound by `J J''` would have to control.
pub fn failed_scheme_probe(u: &RadialField, tol: f64) -> Result<CheckReport> {
    let (u, shift) = normalize_exp_moment(u)?;
    let p = ProbeValues::new(&u)?;
    let lhs = 4.0 * p.j1 * p.j1;
    let rhs = p.j2 * p.middle;
    let violation = if lhs > 0.0 { ((lhs - rhs) / lhs).max(0.0) } else { 0.0 };
    let ratio = lhs / (p.j * p.j2);
    let g = u.grid();
    Ok(CheckReport::graded(
        "failed_scheme_probe",
        "Cauchy-Schwarz bound on J' for the logarithmic flow",
        violation,
        tol,
    )
    .with("j", p.j)
    .with("j_prime", p.j1)
    .with("j_second", p.j2)
    .with("middle", p.middle)
    .with("cauchy_schwarz_lhs", lhs)
    .with("cauchy_schwarz_rhs", rhs)
    .with("ratio_over_j_j_second", if ratio.is_finite() { ratio } else { f64::NAN })
    .with("middle_over_abs_j", p.middle / p.j.abs())
    .with("shift", shift)
    .with_meta(RunMeta { n: g.len(), r_max: g.r_max(), dt: 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::bump;
    use crate::radial::{make_grid, Spacing};

    #[test]
    fn zero_function_gives_flat_curve() {
        let g = make_grid(2, 1e4, 512, Spacing::LogStretched).unwrap();
        let c = exp_moment_curve(&RadialField::zeros(g), 9).unwrap();
        assert!(c.h.iter().chain(&c.h1).chain(&c.h2).chain(&c.h3).all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn curve_vanishes_at_zero_and_half() {
        let g = make_grid(2, 1e4, 512, Spacing::LogStretched).unwrap();
        let u = RadialField::from_fn(g, |r| 1.3 * bump(r, 0.7)).unwrap();
        let c = exp_moment_curve(&u, 21).unwrap();
        assert!(c.h[0].abs() < 1e-12);
        assert!(c.h[c.half()].abs() < 1e-12);
        assert!(c.h2.iter().all(|&x| x >= 0.0));
    }
}
