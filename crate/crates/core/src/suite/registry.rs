//! The named checks run by `verify`, behind a common trait, and a parallel
//! runner that merges their reports by name.
//!
//! Flow runs shared by several checks are computed once per suite and
//! cached in the [`SuiteContext`].

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::constants::{aubin_talenti_residual, ConstantsTable};
use crate::error::{Error, Result};
use crate::flow::{
    ccl_flow_derivative_check, ccl_u_exponent, decay_bounds_check, hd_derivative_check, hd_monotonicity_check,
    kappa_check, run_ccl_flow, run_flow, second_derivative_check, separated_extinction_check,
    vanishing_profile_report, FlowParams, FlowTrace, SobolevConstant,
};
use crate::logflow::{
    compute_h2, exp_moment_curve_check, failed_scheme_probe, h2_derivative_check, h2_monotonicity_check,
    legendre_gap, lemma_loghlsder_check, loghls_deficit, onofri_deficit, onofri_limit_quotient, onofri_limit_value,
    run_log_flow, stationarity_defect, LogFlowParams, LogTrace, MassOneDensity, OnofriInput,
};
use crate::profiles::{aubin_talenti, bump, gn_optimizer, moon_measure, profile, separated, sobolev_flow_exponent};
use crate::radial::{
    dirichlet_energy_with_tail, integrate_with_tail, make_grid, RadialField, RadialGrid, Spacing, TailModel,
};
use crate::report::{CheckReport, RunMeta};
use crate::suite::config::SuiteConfig;
use crate::suite::deficits::{ccl_identity_check, hls_deficit, hls_power, sobolev_deficit};
use crate::suite::family::{perturbation_family, plane_bumps, PlaneBump, FLOW_DATA};
use crate::suite::flows::T_END;
use crate::suite::gap::{explicit_gap_check, theorem_gap_check};

/// Outer radius of the grids on which the Laplacian residual of the
/// optimizer is measured.
pub const RESIDUAL_R_MAX: f64 = 10.0;
/// Exponents of the Onofri limit.
pub const ONOFRI_P: [f64; 3] = [16.0, 64.0, 256.0];
/// Initial data `mu e^{a bump(r, r0)}` of the logarithmic flow runs.
pub const LOG_FLOW_DATA: [PlaneBump; 3] =
    [PlaneBump { a: 0.5, r0: 1.0 }, PlaneBump { a: -0.7, r0: 0.5 }, PlaneBump { a: 1.5, r0: 2.0 }];
/// Random plane bumps drawn per suite.
pub const PLANE_SAMPLES: usize = 5;

/// A flow run shared between checks; failures are kept as text so that
/// every dependent check reports them.
struct Run<T> {
    label: String,
    result: std::result::Result<T, String>,
}

/// Everything a check may need: the configuration, the constants cache and
/// lazily computed flow runs.
pub struct SuiteContext {
    pub config: SuiteConfig,
    pub constants: Arc<ConstantsTable>,
    fd_runs: OnceLock<Vec<Run<FlowTrace>>>,
    log_runs: OnceLock<Vec<Run<LogTrace>>>,
}

impl SuiteContext {
    pub fn new(config: SuiteConfig, constants: Arc<ConstantsTable>) -> Self {
        Self { config, constants, fd_runs: OnceLock::new(), log_runs: OnceLock::new() }
    }

    fn fd_grid(&self) -> Result<Arc<RadialGrid>> {
        make_grid(self.config.d, self.config.r_max_for("fd"), self.config.n, self.config.spacing)
    }

    fn fd_params(&self) -> FlowParams {
        let mut p = FlowParams::new(sobolev_flow_exponent(self.config.d), SobolevConstant::Realized);
        p.control = self.config.control();
        p.eps_ext = self.config.eps_ext;
        p
    }

    /// The perturbations of [`FLOW_DATA`] plus the configured profile,
    /// each run to extinction.
    fn fd_runs(&self) -> &[Run<FlowTrace>] {
        self.fd_runs.get_or_init(|| {
            let mut data: Vec<(String, Result<RadialField>)> = Vec::new();
            match self.fd_grid() {
                Ok(grid) => {
                    let q = hls_power(self.config.d);
                    for p in FLOW_DATA {
                        data.push((p.label(), p.field(&grid).and_then(|w| w.map(|x| x.powf(q)))));
                    }
                    if let Some(spec) = &self.config.profile {
                        data.push((format!("profile={spec}"), profile(spec, &grid)));
                    }
                }
                Err(e) => data.push(("grid".into(), Err(e))),
            }
            let params = self.fd_params();
            data.into_par_iter()
                .map(|(label, v0)| Run { label, result: v0.and_then(|v| run_flow(&v, &params)).map_err(|e| e.to_string()) })
                .collect()
        })
    }

    fn log_runs(&self) -> &[Run<LogTrace>] {
        self.log_runs.get_or_init(|| {
            let grid = make_grid(2, self.config.r_max_for("log"), self.config.n, self.config.spacing);
            let params = LogFlowParams { control: self.config.control(), t_end: T_END, ..LogFlowParams::default() };
            let mut data: Vec<(String, Option<PlaneBump>)> = vec![("mu".into(), None)];
            data.extend(LOG_FLOW_DATA.iter().map(|b| (b.label(), Some(*b))));
            data.into_par_iter()
                .map(|(label, b)| {
                    let result = grid
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|g| {
                            let v0 = match b {
                                None => MassOneDensity::moon(g),
                                Some(b) => b.field(g).and_then(|u| MassOneDensity::perturbed_moon(&u)),
                            };
                            v0.and_then(|v| run_log_flow(&v, &params)).map_err(|e| e.to_string())
                        });
                    Run { label, result }
                })
                .collect()
        })
    }

    fn plane_grid(&self) -> Result<Arc<RadialGrid>> {
        make_grid(2, self.config.r_max_for("log"), self.config.n, self.config.spacing)
    }

    fn plane_samples(&self) -> Vec<PlaneBump> {
        plane_bumps(self.config.seed, PLANE_SAMPLES)
    }

    fn static_grid(&self, d: usize) -> Result<Arc<RadialGrid>> {
        self.constants.grid().build(d)
    }

    fn static_meta(&self) -> RunMeta {
        let g = self.constants.grid();
        RunMeta { n: g.n, r_max: g.r_max, dt: 0.0 }
    }
}

/// One named check.
pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    /// The result under test, in words.
    fn anchor(&self) -> &'static str;
    /// `Some(reason)` if the check does not apply in dimension `d`.
    fn skip_reason(&self, d: usize) -> Option<String>;
    fn run(&self, ctx: &SuiteContext) -> Result<Vec<CheckReport>>;
}

#[derive(Clone, Copy)]
enum Dims {
    Plane,
    AtLeast(usize),
}

/// A check given by a function.
pub struct FnCheck {
    name: &'static str,
    anchor: &'static str,
    dims: Dims,
    run: fn(&SuiteContext) -> Result<Vec<CheckReport>>,
}

impl Check for FnCheck {
    fn name(&self) -> &'static str {
        self.name
    }

    fn anchor(&self) -> &'static str {
        self.anchor
    }

    fn skip_reason(&self, d: usize) -> Option<String> {
        match self.dims {
            Dims::Plane if d != 2 => Some(format!("skipped: two-dimensional check, d = {d}")),
            Dims::AtLeast(k) if d < k => Some(format!("skipped: needs d >= {k}, d = {d}")),
            _ => None,
        }
    }

    fn run(&self, ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
        (self.run)(ctx)
    }
}

fn labeled(mut r: CheckReport, label: &str) -> CheckReport {
    r.name = format!("{}[{label}]", r.name);
    r
}

/// Applies `f` to every shared run, turning run failures into failed
/// reports.
fn per_run<T>(
    runs: &[Run<T>],
    name: &str,
    anchor: &str,
    f: impl Fn(&T) -> Result<CheckReport>,
) -> Vec<CheckReport> {
    runs.iter()
        .map(|run| match &run.result {
            Ok(t) => f(t).map(|r| labeled(r, &run.label)).unwrap_or_else(|e| {
                CheckReport::errored(&format!("{name}[{}]", run.label), anchor, &e)
            }),
            Err(e) => CheckReport::errored(&format!("{name}[{}]", run.label), anchor, e),
        })
        .collect()
}

fn optimizer_residual(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let coarse = aubin_talenti_residual(&make_grid(d, RESIDUAL_R_MAX, 1024, Spacing::LogStretched)?)?;
    let fine = aubin_talenti_residual(&make_grid(d, RESIDUAL_R_MAX, 2048, Spacing::LogStretched)?)?;
    let flow_grid = aubin_talenti_residual(&make_grid(d, ctx.config.r_max_for("fd"), 2048, Spacing::LogStretched)?)?;
    let order = (coarse / fine).log2();
    Ok(vec![CheckReport::graded(
        "optimizer_residual",
        "the Aubin-Talenti profile solves -Delta F = d(d-2) F^{(d+2)/(d-2)}",
        fine,
        ctx.config.tol("optimizer_residual"),
    )
    .with("residual_n1024", coarse)
    .with("residual_n2048", fine)
    .with("observed_order", order)
    .with("residual_n2048_flow_radius", flow_grid)
    .with_meta(RunMeta { n: 2048, r_max: RESIDUAL_R_MAX, dt: 0.0 })
    .require(order > 1.8, "second-order convergence")])
}

fn constant_identity(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    Ok(vec![ccl_identity_check(ctx.config.d, &ctx.constants, ctx.config.tol("constant_identity"))?])
}

/// `int |grad F_p|^2 = 2 pi/(p+1)` and `int F_p^{p+1} = (p-1) pi/2` in
/// `d = 2`.
fn closed_forms(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let grid = ctx.static_grid(2)?;
    let tol = ctx.config.tol("closed_forms");
    [2.0, 3.0, 9.0]
        .iter()
        .map(|&p| {
            let f = RadialField::from_fn(grid.clone(), |r| gn_optimizer(r, p))?;
            let energy = dirichlet_energy_with_tail(&f, TailModel::Fitted)?;
            let norm = integrate_with_tail(&f.map(|x| x.powf(p + 1.0))?, TailModel::Fitted)?;
            let e_ref = 2.0 * PI / (p + 1.0);
            let n_ref = (p - 1.0) * PI / 2.0;
            let res = ((energy - e_ref) / e_ref).abs().max(((norm - n_ref) / n_ref).abs());
            Ok(CheckReport::graded(
                &format!("closed_forms[p={p}]"),
                "closed-form energy and norm of the two-dimensional Gagliardo-Nirenberg optimizers",
                res,
                tol,
            )
            .with("energy", energy)
            .with("energy_expected", e_ref)
            .with("norm", norm)
            .with("norm_expected", n_ref)
            .with_meta(ctx.static_meta()))
        })
        .collect()
}

fn sobolev_deficit_check(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let s = ctx.constants.sobolev(d)?;
    let grid = ctx.static_grid(d)?;
    let f = RadialField::from_fn(grid.clone(), |r| aubin_talenti(r, d))?;
    let scale = s * dirichlet_energy_with_tail(&f, TailModel::Fitted)?;
    let at_f = sobolev_deficit(&f, s)?;
    let w = RadialField::from_fn(grid, |r| aubin_talenti(r, d) + 0.1 * bump(r, 1.0))?;
    let perturbed = sobolev_deficit(&w, s)?;
    let doubled = sobolev_deficit(&w.scale(2.0)?, s)?;
    let homogeneity = (doubled - 4.0 * perturbed).abs() / perturbed.abs().max(f64::MIN_POSITIVE);
    Ok(vec![CheckReport::graded(
        "sobolev_deficit",
        "Sobolev inequality with its sharp constant",
        (at_f / scale).abs(),
        ctx.config.tol("sobolev_deficit"),
    )
    .with("deficit_at_optimizer", at_f)
    .with("deficit_perturbed", perturbed)
    .with("homogeneity_error", homogeneity)
    .with("sobolev", s)
    .with_meta(ctx.static_meta())
    .require(perturbed > 0.0, "deficit > 0 away from the optimizer")
    .require(homogeneity < 1e-10, "deficit is quadratic")])
}

fn hls_deficit_check(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let s = ctx.constants.sobolev(d)?;
    let tol = ctx.config.tol("hls_deficit");
    let q = hls_power(d);
    let grid = ctx.static_grid(d)?;
    let f = RadialField::from_fn(grid.clone(), |r| aubin_talenti(r, d))?;
    let v = f.map(|x| x.powf(q))?;
    let (norm, _) = crate::suite::deficits::hls_terms(&v)?;
    let at_f = hls_deficit(&v, s)? / (s * norm);
    let sob_at_f = sobolev_deficit(&f, s)? / (s * dirichlet_energy_with_tail(&f, TailModel::Fitted)?);
    let w = RadialField::from_fn(grid, |r| (aubin_talenti(r, d) + 0.1 * bump(r, 1.0)).powf(q))?;
    let perturbed = hls_deficit(&w, s)?;
    let doubled = hls_deficit(&w.scale(2.0)?, s)?;
    let homogeneity = (doubled - 4.0 * perturbed).abs() / perturbed.abs().max(f64::MIN_POSITIVE);
    let both_vanish = (at_f.abs() <= tol) == (sob_at_f.abs() <= tol);
    Ok(vec![CheckReport::graded(
        "hls_deficit",
        "Hardy-Littlewood-Sobolev inequality with the Sobolev constant",
        at_f.abs(),
        tol,
    )
    .with("relative_deficit_at_optimizer", at_f)
    .with("relative_sobolev_deficit_at_optimizer", sob_at_f)
    .with("deficit_perturbed", perturbed)
    .with("homogeneity_error", homogeneity)
    .with_meta(ctx.static_meta())
    .require(perturbed > 0.0, "deficit > 0 away from the optimizer")
    .require(homogeneity < 1e-10, "deficit is quadratic")
    .require(both_vanish, "Sobolev and HLS deficits vanish together")])
}

fn hd_derivative(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("hd_derivative");
    Ok(per_run(ctx.fd_runs(), "hd_derivative", "derivative of the HLS functional along the flow", |t| {
        hd_derivative_check(t, tol)
    }))
}

fn hd_monotonicity(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("hd_monotonicity");
    Ok(per_run(ctx.fd_runs(), "hd_monotonicity", "monotonicity of the HLS functional along the flow", |t| {
        hd_monotonicity_check(t, tol)
    }))
}

fn second_derivative(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("second_derivative");
    Ok(per_run(ctx.fd_runs(), "second_derivative", "second derivative of the HLS functional", |t| {
        second_derivative_check(t, tol)
    }))
}

fn decay_bounds(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("decay_bounds");
    let s = ctx.constants.sobolev(ctx.config.d)?;
    Ok(per_run(ctx.fd_runs(), "decay_bounds", "decay estimates and extinction time bounds", |t| {
        decay_bounds_check(t, s, tol)
    }))
}

fn kappa_bound(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("kappa");
    Ok(per_run(ctx.fd_runs(), "kappa_bound", "upper bound on the initial decay rate kappa", |t| kappa_check(t, tol)))
}

fn vanishing_profile(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    Ok(per_run(ctx.fd_runs(), "vanishing_profile", "convergence to the separated profile near extinction", |t| {
        Ok(vanishing_profile_report(t))
    }))
}

fn separated_extinction(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let grid = ctx.fd_grid()?;
    let v0 = RadialField::from_fn(grid, |r| separated(r, d, 1.0, 0.0))?;
    let trace = run_flow(&v0, &ctx.fd_params())?;
    let s = ctx.constants.sobolev(d)?;
    Ok(vec![separated_extinction_check(&trace, 1.0, s, ctx.config.tol("separated_extinction"))?])
}

/// The optimizer (right side zero) and a perturbation of it.
fn ccl_flow(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let grid = make_grid(d, ctx.config.r_max_for("fd-ccl"), ctx.config.n, ctx.config.spacing)?;
    let df = d as f64;
    let q = if d == 2 { 3.0 } else { (df + 1.0) / (df - 1.0) };
    let e = 1.0 / ccl_u_exponent(d);
    let s = if d >= 3 { ctx.constants.sobolev(d)? } else { 0.0 };
    let tol = ctx.config.tol("ccl_flow");
    [0.0, 0.2]
        .into_par_iter()
        .map(|eps| {
            let v0 = RadialField::from_fn(grid.clone(), |r| (gn_optimizer(r, q) + eps * bump(r, 1.0)).powf(e))?;
            let trace = run_ccl_flow(&v0, ctx.config.control(), T_END, s)?;
            Ok(labeled(ccl_flow_derivative_check(&trace, tol)?, &format!("eps={eps}")))
        })
        .collect()
}

fn theorem_gap(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let grid = make_grid(d, ctx.config.r_max_for("fd"), ctx.config.gap_n, ctx.config.spacing)?;
    let params = ctx.fd_params();
    let tol = ctx.config.tol("theorem_gap");
    let mut data: Vec<(String, RadialField)> =
        vec![("optimizer".into(), RadialField::from_fn(grid.clone(), |r| aubin_talenti(r, d))?)];
    for p in &FLOW_DATA[..2] {
        data.push((p.label(), p.field(&grid)?));
    }
    Ok(data
        .into_par_iter()
        .map(|(label, w)| {
            theorem_gap_check(&w, &params, tol)
                .map(|r| labeled(r, &label))
                .unwrap_or_else(|e| CheckReport::errored(&format!("theorem_gap[{label}]"), "integral identity for the HLS deficit", &e))
        })
        .collect())
}

fn explicit_gap(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let d = ctx.config.d;
    let s = ctx.constants.sobolev(d)?;
    let grid = ctx.static_grid(d)?;
    let family = perturbation_family(ctx.config.seed, ctx.config.family_extra)
        .iter()
        .map(|p| Ok((p.label(), p.field(&grid)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![explicit_gap_check(&family, s, ctx.config.tol("explicit_gap"))?])
}

/// Quotients at `p = 16, 64, 256` for `g = bump(r, 1)`: errors against the
/// limit strictly decrease and every quotient is at least one.
fn onofri_limit(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let grid = ctx.static_grid(2)?;
    let g = OnofriInput::new(RadialField::from_fn(grid, |r| bump(r, 1.0))?)?.centered()?;
    let limit = onofri_limit_value(&g)?;
    let tol = ctx.config.tol("onofri");
    let quotients = ONOFRI_P.iter().map(|&p| onofri_limit_quotient(&g, p)).collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = quotients.iter().map(|q| (q - limit).abs()).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let lowest = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut r = CheckReport::graded(
        "onofri_limit",
        "Onofri inequality as the limit of Gagliardo-Nirenberg inequalities",
        (1.0 - lowest).max(0.0),
        tol,
    )
    .with("limit", limit)
    .with("onofri_deficit", onofri_deficit(&g))
    .with_meta(ctx.static_meta())
    .require(decreasing, "error decreases strictly in p");
    for ((p, q), e) in ONOFRI_P.iter().zip(&quotients).zip(&errors) {
        r = r.with(&format!("quotient_p{p}"), *q).with(&format!("error_p{p}"), *e);
    }
    Ok(vec![r])
}

fn onofri_deficits(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let grid = ctx.static_grid(2)?;
    let tol = ctx.config.tol("onofri");
    let mut worst: f64 = f64::INFINITY;
    let mut constants_worst: f64 = 0.0;
    for b in ctx.plane_samples() {
        worst = worst.min(onofri_deficit(&OnofriInput::new(b.field(&grid)?)?));
    }
    for c in [-1.0, 0.0, 2.0] {
        let d = onofri_deficit(&OnofriInput::new(RadialField::constant(grid.clone(), c)?)?);
        constants_worst = constants_worst.max(d.abs());
    }
    Ok(vec![CheckReport::graded("onofri_deficit", "Onofri inequality on the sphere", (-worst).max(0.0), tol)
        .with("min_deficit", worst)
        .with("max_abs_deficit_constants", constants_worst)
        .with_meta(ctx.static_meta())
        .require(constants_worst <= tol, "deficit vanishes on constants")])
}

/// Log-HLS deficit at `mu`, its positivity on perturbations and agreement
/// with the Legendre gap between the two free energies.
fn loghls_duality(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let grid = ctx.plane_grid()?;
    let tol = ctx.config.tol("loghls");
    let mu = RadialField::from_fn(grid.clone(), moon_measure)?;
    let at_mu = loghls_deficit(&mu, 1.0)?;
    let mut worst_gap: f64 = 0.0;
    let mut min_deficit = f64::INFINITY;
    let mut worst_h2: f64 = 0.0;
    for b in ctx.plane_samples() {
        let v = MassOneDensity::perturbed_moon(&b.field(&grid)?)?;
        let deficit = loghls_deficit(v.field(), 1.0)?;
        let gap = legendre_gap(&v)?;
        worst_gap = worst_gap.max((gap - deficit).abs());
        min_deficit = min_deficit.min(deficit);
        worst_h2 = worst_h2.max((gap + 4.0 * PI * compute_h2(&v)?).abs());
    }
    Ok(vec![CheckReport::graded(
        "loghls_duality",
        "logarithmic HLS inequality as the Legendre dual of Onofri",
        worst_gap,
        tol,
    )
    .with("deficit_at_mu", at_mu)
    .with("min_deficit", min_deficit)
    .with("max_gap_mismatch", worst_gap)
    .with("max_h2_gap_mismatch", worst_h2)
    .with_meta(RunMeta { n: grid.len(), r_max: grid.r_max(), dt: 0.0 })
    .require(at_mu.abs() <= 1e-5, "deficit at mu within 1e-5")
    .require(min_deficit > 0.0, "deficit > 0 on perturbations")
    .require(worst_h2 <= 1e-10, "H_2 = -gap / 4 pi")])
}

fn per_plane_sample(
    ctx: &SuiteContext,
    f: impl Fn(&RadialField) -> Result<CheckReport>,
) -> Result<Vec<CheckReport>> {
    let grid = ctx.plane_grid()?;
    ctx.plane_samples().iter().map(|b| Ok(labeled(f(&b.field(&grid)?)?, &b.label()))).collect()
}

fn exp_moment(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("exp_moment");
    per_plane_sample(ctx, |u| exp_moment_curve_check(u, 41, tol))
}

fn lemma(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("lemma");
    per_plane_sample(ctx, |u| lemma_loghlsder_check(u, tol))
}

fn probe(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("probe");
    per_plane_sample(ctx, |u| failed_scheme_probe(u, tol))
}

fn log_runs_without_mu(ctx: &SuiteContext) -> &[Run<LogTrace>] {
    &ctx.log_runs()[1..]
}

fn h2_derivative(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("h2_derivative");
    Ok(per_run(log_runs_without_mu(ctx), "h2_derivative", "derivative of H_2 along the logarithmic flow", |t| {
        h2_derivative_check(t, tol)
    }))
}

fn h2_monotonicity(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("h2_monotonicity");
    Ok(per_run(log_runs_without_mu(ctx), "h2_monotonicity", "monotonicity of H_2 along the logarithmic flow", |t| {
        h2_monotonicity_check(t, tol)
    }))
}

fn log_stationarity(ctx: &SuiteContext) -> Result<Vec<CheckReport>> {
    let tol = ctx.config.tol("stationarity");
    let anchor = "mu is a stationary state of the logarithmic flow";
    Ok(per_run(&ctx.log_runs()[..1], "log_stationarity", anchor, |t| {
        let grid = t.grid.as_ref();
        Ok(CheckReport::graded("log_stationarity", anchor, stationarity_defect(t), tol)
            .with("mass_drift", t.max_mass_drift())
            .with("steps", t.steps as f64)
            .with_meta(RunMeta { n: grid.map_or(0, |g| g.len()), r_max: grid.map_or(0.0, |g| g.r_max()), dt: t.dt0 }))
    }))
}

/// Every check `verify` knows, in registry order.
pub fn check_registry() -> Vec<Box<dyn Check>> {
    let c = |name, anchor, dims, run| -> Box<dyn Check> { Box::new(FnCheck { name, anchor, dims, run }) };
    use Dims::*;
    vec![
        c("optimizer_residual", "Aubin-Talenti profile solves its Euler-Lagrange equation", AtLeast(3), optimizer_residual),
        c("constant_identity", "Sobolev and Gagliardo-Nirenberg constant identities", Plane, constant_identity),
        c("constant_identity", "Sobolev and Gagliardo-Nirenberg constant identities", AtLeast(3), constant_identity),
        c("closed_forms", "closed forms for the two-dimensional optimizers", Plane, closed_forms),
        c("sobolev_deficit", "Sobolev inequality", AtLeast(3), sobolev_deficit_check),
        c("hls_deficit", "Hardy-Littlewood-Sobolev inequality", AtLeast(3), hls_deficit_check),
        c("hd_derivative", "derivative of the HLS functional along the flow", AtLeast(3), hd_derivative),
        c("hd_monotonicity", "monotonicity of the HLS functional along the flow", AtLeast(3), hd_monotonicity),
        c("second_derivative", "second derivative of the HLS functional", AtLeast(5), second_derivative),
        c("decay_bounds", "decay estimates and extinction time bounds", AtLeast(3), decay_bounds),
        c("kappa_bound", "upper bound on the initial decay rate kappa", AtLeast(3), kappa_bound),
        c("separated_extinction", "extinction of the separated solution", AtLeast(3), separated_extinction),
        c("vanishing_profile", "convergence to the separated profile near extinction", AtLeast(3), vanishing_profile),
        c("ccl_flow_derivative", "HLS functional along the flow with m = d/(d+2)", AtLeast(2), ccl_flow),
        c("theorem_gap", "integral identity for the HLS deficit", AtLeast(5), theorem_gap),
        c("explicit_gap", "explicit bound on the HLS deficit", AtLeast(5), explicit_gap),
        c("onofri_limit", "Onofri inequality as a limit", Plane, onofri_limit),
        c("onofri_deficit", "Onofri inequality", Plane, onofri_deficits),
        c("loghls_duality", "logarithmic HLS inequality and duality", Plane, loghls_duality),
        c("exp_moment_curve", "convexity of the exponential-moment curve", Plane, exp_moment),
        c("loghls_derivative_lemma", "energy bound under the exponential normalization", Plane, lemma),
        c("h2_derivative", "derivative of H_2 along the logarithmic flow", Plane, h2_derivative),
        c("h2_monotonicity", "monotonicity of H_2 along the logarithmic flow", Plane, h2_monotonicity),
        c("log_stationarity", "mu is stationary under the logarithmic flow", Plane, log_stationarity),
        c("failed_scheme_probe", "Cauchy-Schwarz bound for the logarithmic flow", Plane, probe),
    ]
}

/// Check names, deduplicated, in registry order.
pub fn check_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Vec::new();
    for c in check_registry() {
        if !names.contains(&c.name()) {
            names.push(c.name());
        }
    }
    names
}

/// Runs the registry (or the checks named in `only`) in parallel and
/// returns the reports sorted by name. Checks that do not apply produce a
/// skipped report; a check that errors produces a failed one.
pub fn run_suite(ctx: &SuiteContext, registry: &[Box<dyn Check>], only: Option<&[String]>) -> Result<Vec<CheckReport>> {
    if let Some(names) = only {
        let known = check_names();
        if let Some(bad) = names.iter().find(|n| !known.contains(&n.as_str())) {
            return Err(Error::Parse(format!("unknown check '{bad}' (known: {})", known.join(", "))));
        }
    }
    let d = ctx.config.d;
    let selected: Vec<&Box<dyn Check>> =
        registry.iter().filter(|c| only.map_or(true, |names| names.iter().any(|n| n == c.name()))).collect();
    // A name registered for several dimension ranges is skipped only if no
    // variant applies.
    let applicable: Vec<&Box<dyn Check>> = selected.iter().copied().filter(|c| c.skip_reason(d).is_none()).collect();
    let mut reports: Vec<CheckReport> = selected
        .iter()
        .filter(|c| c.skip_reason(d).is_some() && !applicable.iter().any(|a| a.name() == c.name()))
        .fold(Vec::<&Box<dyn Check>>::new(), |mut acc, c| {
            if !acc.iter().any(|a| a.name() == c.name()) {
                acc.push(c);
            }
            acc
        })
        .into_iter()
        .map(|c| CheckReport::skipped(c.name(), c.anchor(), &c.skip_reason(d).unwrap_or_default()))
        .collect();
    let ran: Vec<CheckReport> = applicable
        .par_iter()
        .flat_map_iter(|c| c.run(ctx).unwrap_or_else(|e| vec![CheckReport::errored(c.name(), c.anchor(), &e)]))
        .collect();
    reports.extend(ran);
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_per_dimension() {
        for d in 2..=6 {
            let mut names: Vec<&str> =
                check_registry().iter().filter(|c| c.skip_reason(d).is_none()).map(|c| c.name()).collect();
            let n = names.len();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), n, "d = {d}");
        }
    }

    #[test]
    fn low_dimensions_skip_the_gap_checks() {
        let ctx = SuiteContext::new(SuiteConfig { d: 4, ..SuiteConfig::default() }, Arc::new(ConstantsTable::default()));
        let only = vec!["theorem_gap".to_string(), "explicit_gap".to_string()];
        let reports = run_suite(&ctx, &check_registry(), Some(&only)).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.verdict == crate::report::Verdict::Skipped));
    }
}
