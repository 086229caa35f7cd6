//! Checks of the flow identities and estimates against a computed trace.
//!
//! Time derivatives are taken by three-point differences on the (nonuniform)
//! sample times and compared with the analytic right sides stored in each
//! sample.

use crate::error::{Error, Result};
use crate::flow::run::{FlowTrace, Termination};
use crate::profiles::{aubin_talenti, separated_coefficients};
use crate::radial::RadialField;
use crate::report::{CheckReport, RunMeta};

/// Fewest samples a derivative check accepts.
pub const MIN_SAMPLES: usize = 5;

/// Three-point derivative of `f` at every interior sample.
pub fn interior_derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    (1..t.len().saturating_sub(1))
        .map(|k| {
            let h1 = t[k] - t[k - 1];
            let h2 = t[k + 1] - t[k];
            -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] + h1 / (h2 * (h1 + h2)) * f[k + 1]
        })
        .collect()
}

fn meta(trace: &FlowTrace) -> RunMeta {
    let (n, r_max) = trace.grid.as_ref().map_or((0, 0.0), |g| (g.len(), g.r_max()));
    RunMeta { n, r_max, dt: trace.dt0 }
}

fn require_samples(trace: &FlowTrace) -> Result<()> {
    if trace.samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples(format!("have {}, need {MIN_SAMPLES}", trace.samples.len())));
    }
    Ok(())
}

/// Max-norm mismatch between `lhs` and `rhs`, relative to `max |rhs|` or
/// to `scale` if that is larger (so that traces on which both sides vanish
/// are graded absolutely against their natural size).
fn mismatch(lhs: &[f64], rhs: &[f64], scale: f64) -> f64 {
    let diff = lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let size = rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
    diff / size.max(scale)
}

/// `dH/dt` against `H' = 2 J^{2/d} [S ||grad u||^2 - ||u||_{2*}^2]`, `u = v^m`,
/// and the sign of the right side.
pub fn hd_derivative_check(trace: &FlowTrace, tol: f64) -> Result<CheckReport> {
    require_samples(trace)?;
    let t = trace.times();
    let h = trace.column(|s| s.h);
    let lhs = interior_derivative(&t, &h);
    let rhs: Vec<f64> = trace.samples[1..t.len() - 1].iter().map(|s| s.h_prime).collect();
    // Natural size of H': the two terms of 2J(SQ - 1).
    let scale = 1e-6 * 2.0 * trace.first().j;
    let residual = mismatch(&lhs, &rhs, scale);
    let min_rhs = trace.samples.iter().map(|s| s.h_prime / (2.0 * s.j)).fold(f64::INFINITY, f64::min);
    Ok(CheckReport::graded(
        "hd_derivative",
        "derivative of the HLS functional along the fast diffusion flow",
        residual,
        tol,
    )
    .with("min_rhs_over_2J", min_rhs)
    .with("samples", t.len() as f64)
    .with_meta(meta(trace))
    .require(min_rhs >= -1e-10, "right side >= 0"))
}

/// `H` nondecreasing per accepted step within `tol |H(0)|`, `H <= 0`
/// throughout, and `J` strictly decreasing.
/// Relative size, against the terms of `H`, below which a positive `H` is
/// attributed to roundoff.
pub const ROUNDOFF_H: f64 = 1e-10;

pub fn hd_monotonicity_check(trace: &FlowTrace, tol: f64) -> Result<CheckReport> {
    require_samples(trace)?;
    let h0 = trace.first().h.abs().max(f64::MIN_POSITIVE);
    let mut worst_drop = 0.0_f64;
    let mut j_increase = 0usize;
    for w in trace.samples.windows(2) {
        worst_drop = worst_drop.max(w[0].h - w[1].h);
        if w[1].j >= w[0].j {
            j_increase += 1;
        }
    }
    let max_h = trace.samples.iter().map(|s| s.h).fold(f64::NEG_INFINITY, f64::max);
    let residual = worst_drop.max(0.0) / h0;
    // H is a difference of two terms of size `hls_term`; for equality-case
    // data H(0) itself is discretization error and cannot set the scale.
    let roundoff = ROUNDOFF_H * trace.first().hls_term.abs();
    Ok(CheckReport::graded(
        "hd_monotonicity",
        "monotonicity of the HLS functional along the fast diffusion flow",
        residual,
        tol,
    )
    .with("worst_decrease", worst_drop.max(0.0))
    .with("max_h", max_h)
    .with("h0", trace.first().h)
    .with("steps", trace.steps as f64)
    .with("roundoff_allowance", roundoff)
    .with_meta(meta(trace))
    .require(max_h <= tol * h0 + roundoff, "H <= 0 (HLS inequality)")
    .require(j_increase == 0, "J strictly decreasing"))
}

/// `Q' = -2m J^{2/d-1} K` and `H'' = -(m+1) Lambda H' - 4 m S J^{2/d} K`,
/// plus monotonicity of `Q`. Only meaningful for `d >= 5`, where `K` is
/// integrable for general data.
pub fn second_derivative_check(trace: &FlowTrace, tol: f64) -> Result<CheckReport> {
    let name = "second_derivative";
    let anchor = "second derivative of the HLS functional along the fast diffusion flow";
    if trace.d < 5 {
        return Ok(CheckReport::skipped(
            name,
            anchor,
            "needs d >= 5: K is not integrable for general data in lower dimensions",
        ));
    }
    require_samples(trace)?;
    let d = trace.d as f64;
    let m = trace.m;
    let s = trace.sobolev;
    let t = trace.times();
    let inner = &trace.samples[1..t.len() - 1];

    let q = trace.column(|x| x.q);
    let dq = interior_derivative(&t, &q);
    let q_rhs: Vec<f64> = inner.iter().map(|x| -2.0 * m * x.j.powf(2.0 / d - 1.0) * x.k).collect();
    let q_res = mismatch(&dq, &q_rhs, 1e-6 * trace.first().q * trace.first().lambda);

    let hp = trace.column(|x| x.h_prime);
    let dhp = interior_derivative(&t, &hp);
    let h_rhs: Vec<f64> = inner
        .iter()
        .map(|x| -(m + 1.0) * x.lambda * x.h_prime - 4.0 * m * s * x.j.powf(2.0 / d) * x.k)
        .collect();
    let h_res = mismatch(&dhp, &h_rhs, 1e-6 * trace.first().j * trace.first().lambda);

    let q0 = trace.first().q;
    let q_rise = trace.samples.windows(2).map(|w| w[1].q - w[0].q).fold(0.0, f64::max) / q0;
    let min_k = trace.samples.iter().map(|x| x.k).fold(f64::INFINITY, f64::min);
    let j = trace.column(|x| x.j);
    let min_jpp = interior_derivative(&t[1..t.len() - 1], &interior_derivative(&t, &j))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(CheckReport::graded(name, anchor, h_res.max(q_res), tol)
        .with("residual_h_second", h_res)
        .with("residual_q_prime", q_res)
        .with("max_relative_q_increase", q_rise)
        .with("min_k", min_k)
        .with("min_j_second_derivative", min_jpp)
        .with_meta(meta(trace))
        .require(q_rise <= 1e-10, "Q nonincreasing")
        .require(min_k >= 0.0, "K >= 0"))
}

/// `kappa = (2d/(d+2)) S^{-1} J(0)^{-2/d}` for the flow with
/// `m = (d-2)/(d+2)`; bounded by `d / (2T)`.
pub fn kappa(v0: &RadialField, sobolev: f64) -> Result<f64> {
    let d = v0.dim() as f64;
    let m = (d - 2.0) / (d + 2.0);
    let j0 = crate::radial::integrate_with_tail(
        &v0.map(|x| x.powf(m + 1.0))?,
        crate::radial::TailModel::Fitted,
    )?;
    if !(j0 > 0.0) {
        return Err(Error::Extinct(j0));
    }
    Ok(2.0 * d / (d + 2.0) / sobolev * j0.powf(-2.0 / d))
}

/// The same quantity from a trace's first sample and its Sobolev constant.
pub fn trace_kappa(trace: &FlowTrace) -> f64 {
    let d = trace.d as f64;
    2.0 * d / (d + 2.0) / trace.sobolev * trace.first().j.powf(-2.0 / d)
}

/// `kappa T_hat <= d / 2` within `tol` relative.
pub fn kappa_check(trace: &FlowTrace, tol: f64) -> Result<CheckReport> {
    let t_hat = trace.t_hat.ok_or_else(|| Error::FlowFailure {
        t: trace.last().t,
        reason: "no extinction time".into(),
    })?;
    let k = trace_kappa(trace);
    let bound = trace.d as f64 / 2.0;
    let excess = (k * t_hat - bound) / bound;
    Ok(CheckReport::graded("kappa_bound", "upper bound on the initial decay rate kappa", excess.max(0.0), tol)
        .with("kappa", k)
        .with("t_hat", t_hat)
        .with("kappa_t_hat", k * t_hat)
        .with("bound", bound)
        .with_meta(meta(trace)))
}

/// The estimates on `J`, `||grad v^m||^2` and `T` for a flow run to
/// extinction, evaluated at every sample with `T = T_hat`. Margins are
/// relative; a negative margin is a violation.
pub fn decay_bounds_check(trace: &FlowTrace, sobolev: f64, tol: f64) -> Result<CheckReport> {
    let name = "decay_bounds";
    let anchor = "decay estimates and extinction time bounds for the fast diffusion flow";
    require_samples(trace)?;
    let t_hat = match (trace.termination, trace.t_hat) {
        (Termination::Extinct, Some(t)) => t,
        _ => {
            return Ok(CheckReport::graded(name, anchor, f64::INFINITY, tol)
                .note("incomplete: trace did not reach extinction")
                .with_meta(meta(trace)))
        }
    };
    let d = trace.d as f64;
    let first = trace.first();
    let (j0, e0) = (first.j, first.energy);
    let mut lower_j = f64::INFINITY;
    let mut upper_j = f64::INFINITY;
    let mut linear_j = f64::INFINITY;
    let mut energy = f64::INFINITY;
    for s in &trace.samples {
        let floor = (4.0 * (t_hat - s.t).max(0.0) / ((d + 2.0) * sobolev)).powf(d / 2.0);
        lower_j = lower_j.min((s.j - floor) / s.j);
        upper_j = upper_j.min((j0 - s.j) / j0);
        let lin = j0 - 2.0 * d / (d + 2.0) * s.t * e0;
        linear_j = linear_j.min((s.j - lin) / j0);
        energy = energy.min((e0 - s.energy) / e0);
    }
    let t_upper = 0.25 * (d + 2.0) * sobolev * j0.powf(2.0 / d);
    let t_lower = (d + 2.0) / (2.0 * d) * j0 / e0;
    let upper_t = (t_upper - t_hat) / t_upper;
    let lower_t = (t_hat - t_lower) / t_lower;

    let mut margins = vec![("margin_j_lower", lower_j), ("margin_j_upper", upper_j), ("margin_t_upper", upper_t)];
    let mut report;
    if trace.d >= 5 {
        margins.extend([("margin_t_lower", lower_t), ("margin_j_linear", linear_j), ("margin_energy", energy)]);
    }
    let worst = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    report = CheckReport::graded(name, anchor, (-worst).max(0.0), tol)
        .with("t_hat", t_hat)
        .with("t_upper_bound", t_upper)
        .with("t_lower_bound", t_lower)
        .with_meta(meta(trace));
    for (k, v) in margins {
        report = report.with(k, v);
    }
    if trace.d < 5 {
        report = report.note("estimates needing d >= 5 not evaluated");
    }
    Ok(report)
}

/// For a trace started from the separated solution with final time
/// `t_final`: the least-squares slope of `J^{2/d}` against
/// `-4/((d+2) S)`, the worst deviation from that line, and `T_hat` against
/// `t_final`, all relative.
pub fn separated_extinction_check(trace: &FlowTrace, t_final: f64, sobolev: f64, tol: f64) -> Result<CheckReport> {
    require_samples(trace)?;
    let d = trace.d as f64;
    let t = trace.times();
    let y = trace.column(|s| s.j.powf(2.0 / d));
    let k = t.len() as f64;
    let mt = t.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let expected = -4.0 / ((d + 2.0) * sobolev);
    let slope_err = (slope / expected - 1.0).abs();
    let line_err = t
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - (my + slope * (a - mt))).abs())
        .fold(0.0, f64::max)
        / y[0];
    let t_hat = trace.t_hat.unwrap_or(f64::NAN);
    let t_err = (t_hat / t_final - 1.0).abs();
    Ok(CheckReport::graded(
        "separated_extinction",
        "extinction of the separated solution",
        slope_err.max(line_err).max(t_err),
        tol,
    )
    .with("slope", slope)
    .with("expected_slope", expected)
    .with("linearity_deviation", line_err)
    .with("t_hat", t_hat)
    .with("t_final", t_final)
    .with_meta(meta(trace)))
}

/// One late-time point of [`vanishing_profile_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VanishingSample {
    pub t: f64,
    pub lambda: f64,
    /// `sup |v / v_bar - 1|` over the fitting window.
    pub deficit: f64,
    /// `(T_hat - t)^{-(d+2)/4}` times `deficit`.
    pub normalized: f64,
}

/// Nodes with `r` above this fraction of `R_max` are left out of the fit.
const FIT_WINDOW: f64 = 0.1;

fn relative_sup(v: &[f64], r: &[f64], d: usize, amp: f64, lambda: f64) -> f64 {
    let q = (d as f64 + 2.0) / (d as f64 - 2.0);
    let scale = lambda.powf(-(d as f64 + 2.0) / 2.0) * amp;
    v.iter()
        .zip(r)
        .map(|(&x, &r)| (x / (scale * aubin_talenti(r / lambda, d).powf(q)) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Golden-section search for the `lambda` in `[lo, hi]` minimizing `f`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Distance of late-time snapshots to the best-fitting dilate of the
/// separated solution vanishing at `T_hat`, unweighted relative sup norm
/// over `r <= 0.1 R_max`, with `lambda` fitted on `[1/2, 2]` (log scale).
///
/// Snapshots with `T_hat - t` inside the last decade are used. On a fixed
/// grid the deficit levels off at the discretization floor, so the
/// normalized sequence is informative only down to that level.
pub fn vanishing_profile_diagnostic(trace: &FlowTrace) -> Result<Vec<VanishingSample>> {
    let t_hat = trace.t_hat.ok_or_else(|| Error::FlowFailure {
        t: trace.last().t,
        reason: "no extinction time".into(),
    })?;
    let d = trace.d;
    let grid = trace.grid.clone().ok_or_else(|| Error::Domain("trace carries no grid".into()))?;
    let cut = grid.nodes().iter().take_while(|&&r| r <= FIT_WINDOW * grid.r_max()).count();
    let r = &grid.nodes()[..cut];
    let (alpha, c) = separated_coefficients(d);
    let mut out = Vec::new();
    for snap in &trace.snapshots {
        let left = t_hat - snap.t;
        if !(left > 0.0 && left <= 0.1 * t_hat) {
            continue;
        }
        let amp = c * left.powf(alpha);
        let v = &snap.values[..cut];
        let ll = golden_min(|x| relative_sup(v, r, d, amp, x.exp()), 0.5f64.ln(), 2f64.ln(), 60);
        let lambda = ll.exp();
        let deficit = relative_sup(v, r, d, amp, lambda);
        if !deficit.is_finite() {
            log::warn!("lambda fit failed at t = {}", snap.t);
            continue;
        }
        out.push(VanishingSample {
            t: snap.t,
            lambda,
            deficit,
            normalized: left.powf(-(d as f64 + 2.0) / 4.0) * deficit,
        });
    }
    Ok(out)
}

/// [`vanishing_profile_diagnostic`] summarized as a diagnostic report.
pub fn vanishing_profile_report(trace: &FlowTrace) -> CheckReport {
    let name = "vanishing_profile";
    let anchor = "convergence to the separated solution near extinction";
    match vanishing_profile_diagnostic(trace) {
        Ok(seq) if !seq.is_empty() => {
            let first = seq[0];
            let last = seq[seq.len() - 1];
            let decreasing = seq.windows(2).filter(|w| w[1].deficit <= w[0].deficit).count();
            CheckReport::diagnostic(name, anchor, last.deficit)
                .with("samples", seq.len() as f64)
                .with("first_deficit", first.deficit)
                .with("last_deficit", last.deficit)
                .with("last_lambda", last.lambda)
                .with("first_normalized", first.normalized)
                .with("last_normalized", last.normalized)
                .with("decreasing_steps", decreasing as f64)
                .with_meta(meta(trace))
        }
        Ok(_) => CheckReport::diagnostic(name, anchor, f64::NAN).note("no snapshots in the last decade before T_hat"),
        Err(e) => CheckReport::diagnostic(name, anchor, f64::NAN).note(format!("error: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_derivative_is_exact_for_quadratics() {
        let t = [0.0, 0.1, 0.25, 0.3, 0.7];
        let f: Vec<f64> = t.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let df = interior_derivative(&t, &f);
        for (k, v) in df.iter().enumerate() {
            assert!((v - (6.0 * t[k + 1] - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = golden_min(|x| (x - 0.3).powi(2), -1.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
