//! The flows selectable by name, behind a common trait.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::flow::{
    ccl_flow_derivative_check, ccl_u_exponent, decay_bounds_check, hd_derivative_check, hd_monotonicity_check,
    kappa_check, run_ccl_flow, run_flow, separated_extinction_check, trace_kappa, CclTrace, FlowParams, FlowTrace,
    SobolevConstant,
};
use crate::logflow::{h2_derivative_check, h2_monotonicity_check, run_log_flow, stationarity_defect, LogFlowParams, LogTrace, MassOneDensity};
use crate::profiles::{gn_optimizer, profile, sobolev_flow_exponent, ProfileKind, ProfileSpec};
use crate::radial::{make_grid, RadialField, RadialGrid};
use crate::report::CheckReport;
use crate::suite::config::SuiteConfig;

/// Time horizon of the flows that do not vanish.
pub const T_END: f64 = 0.5;

pub enum FlowOutput {
    Fd(FlowTrace),
    Ccl(CclTrace),
    Log(LogTrace),
}

impl FlowOutput {
    /// The trace CSV.
    pub fn trace_csv(&self) -> String {
        match self {
            Self::Fd(t) => t.to_csv(),
            Self::Ccl(t) => t.flow.to_csv(),
            Self::Log(t) => t.to_csv(),
        }
    }

    /// Further CSV artifacts as `(file stem, content)`.
    pub fn extra_csv(&self) -> Vec<(String, String)> {
        match self {
            Self::Ccl(t) => vec![("ccl_identity".into(), t.to_csv())],
            _ => Vec::new(),
        }
    }

    /// Stored snapshots as `(t, field)`.
    pub fn fields(&self) -> Result<Vec<(f64, RadialField)>> {
        let fd = |trace: &FlowTrace| -> Result<Vec<(f64, RadialField)>> {
            trace.snapshots.iter().map(|s| Ok((s.t, trace.snapshot_field(s)?))).collect()
        };
        match self {
            Self::Fd(t) => fd(t),
            Self::Ccl(t) => fd(&t.flow),
            Self::Log(t) => {
                let grid = t.grid.clone().ok_or_else(|| Error::Domain("trace carries no grid".into()))?;
                let last = t.samples.last().map_or(0.0, |s| s.t);
                Ok(vec![(last, RadialField::new(grid, t.final_values.clone())?)])
            }
        }
    }
}

/// Scalars and checks describing one run.
#[derive(Debug, Clone, Default)]
pub struct FlowSummary {
    pub values: BTreeMap<String, f64>,
    pub reports: Vec<CheckReport>,
}

pub trait Flow: Send + Sync {
    fn name(&self) -> &'static str;
    /// Rejects dimensions the flow is not defined for.
    fn validate(&self, d: usize) -> Result<()>;
    /// Initial datum when no profile is configured.
    fn default_profile(&self, grid: &Arc<RadialGrid>) -> Result<RadialField>;
    fn run(&self, v0: &RadialField, config: &SuiteConfig, constants: &ConstantsTable) -> Result<FlowOutput>;
    fn summarize(&self, output: &FlowOutput, config: &SuiteConfig, constants: &ConstantsTable) -> Result<FlowSummary>;
}

/// `v_t = Delta v^m` with `m = (d-2)/(d+2)`, run to extinction.
pub struct FastDiffusion;

/// `v_t = Delta v^m` with `m = d/(d+2)` (`1/2` in `d = 2`) up to [`T_END`].
pub struct CclFlow;

/// `v_t = Delta log(v/mu)` on the plane up to [`T_END`].
pub struct LogFlow;

impl Flow for FastDiffusion {
    fn name(&self) -> &'static str {
        "fd"
    }

    fn validate(&self, d: usize) -> Result<()> {
        if d < 3 {
            return Err(Error::Domain(format!("flow fd needs d >= 3, got d = {d}")));
        }
        Ok(())
    }

    fn default_profile(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        profile(&ProfileSpec::separated(1.0, 0.0), grid)
    }

    fn run(&self, v0: &RadialField, config: &SuiteConfig, _: &ConstantsTable) -> Result<FlowOutput> {
        let mut params = FlowParams::new(sobolev_flow_exponent(v0.dim()), SobolevConstant::Realized);
        params.control = config.control();
        params.eps_ext = config.eps_ext;
        Ok(FlowOutput::Fd(run_flow(v0, &params)?))
    }

    fn summarize(&self, output: &FlowOutput, config: &SuiteConfig, constants: &ConstantsTable) -> Result<FlowSummary> {
        let FlowOutput::Fd(trace) = output else {
            return Err(Error::Domain("fd summary needs an fd trace".into()));
        };
        let s_d = constants.sobolev(trace.d)?;
        let mut sum = FlowSummary::default();
        sum.values.insert("steps".into(), trace.steps as f64);
        sum.values.insert("rejections".into(), trace.rejections as f64);
        sum.values.insert("realized_sobolev".into(), trace.sobolev);
        sum.values.insert("sobolev".into(), s_d);
        sum.values.insert("kappa".into(), trace_kappa(trace));
        if let Some(t) = trace.t_hat {
            sum.values.insert("t_hat".into(), t);
            sum.reports.push(kappa_check(trace, config.tol("kappa"))?);
            sum.reports.push(decay_bounds_check(trace, s_d, config.tol("decay_bounds"))?);
        }
        sum.reports.push(hd_derivative_check(trace, config.tol("hd_derivative"))?);
        sum.reports.push(hd_monotonicity_check(trace, config.tol("hd_monotonicity"))?);
        let spec = config.profile.clone().unwrap_or_else(|| ProfileSpec::separated(1.0, 0.0));
        if let ProfileKind::Separated { t_final, t } = spec.kind {
            // The amplitude lambda^{-(d+2)/2} that accompanies a dilation
            // leaves the extinction time unchanged.
            sum.reports.push(separated_extinction_check(trace, t_final - t, s_d, config.tol("separated_extinction"))?);
        }
        Ok(sum)
    }
}

impl Flow for CclFlow {
    fn name(&self) -> &'static str {
        "fd-ccl"
    }

    fn validate(&self, d: usize) -> Result<()> {
        if d < 2 {
            return Err(Error::Domain(format!("flow fd-ccl needs d >= 2, got d = {d}")));
        }
        Ok(())
    }

    /// `v = F_q^{(d+2)/(d-1)}` (`F_3^4` in `d = 2`), for which the
    /// identity's right side vanishes.
    fn default_profile(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        let d = grid.dim() as f64;
        let q = if grid.dim() == 2 { 3.0 } else { (d + 1.0) / (d - 1.0) };
        let e = 1.0 / ccl_u_exponent(grid.dim());
        RadialField::from_fn(grid.clone(), |r| gn_optimizer(r, q).powf(e))
    }

    fn run(&self, v0: &RadialField, config: &SuiteConfig, constants: &ConstantsTable) -> Result<FlowOutput> {
        let d = v0.dim();
        let s = if d >= 3 { constants.sobolev(d)? } else { 0.0 };
        Ok(FlowOutput::Ccl(run_ccl_flow(v0, config.control(), T_END, s)?))
    }

    fn summarize(&self, output: &FlowOutput, config: &SuiteConfig, _: &ConstantsTable) -> Result<FlowSummary> {
        let FlowOutput::Ccl(trace) = output else {
            return Err(Error::Domain("fd-ccl summary needs an fd-ccl trace".into()));
        };
        let mut sum = FlowSummary::default();
        sum.values.insert("steps".into(), trace.flow.steps as f64);
        sum.values.insert("m".into(), trace.m);
        sum.reports.push(ccl_flow_derivative_check(trace, config.tol("ccl_flow"))?);
        Ok(sum)
    }
}

impl Flow for LogFlow {
    fn name(&self) -> &'static str {
        "log"
    }

    fn validate(&self, d: usize) -> Result<()> {
        if d != 2 {
            return Err(Error::Domain(format!("flow log lives on the plane: needs d = 2, got d = {d}")));
        }
        Ok(())
    }

    fn default_profile(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        profile(&ProfileSpec::moon_measure(), grid)
    }

    fn run(&self, v0: &RadialField, config: &SuiteConfig, _: &ConstantsTable) -> Result<FlowOutput> {
        let v0 = MassOneDensity::new(v0.clone())?;
        let params = LogFlowParams { control: config.control(), t_end: T_END, ..LogFlowParams::default() };
        Ok(FlowOutput::Log(run_log_flow(&v0, &params)?))
    }

    fn summarize(&self, output: &FlowOutput, config: &SuiteConfig, _: &ConstantsTable) -> Result<FlowSummary> {
        let FlowOutput::Log(trace) = output else {
            return Err(Error::Domain("log summary needs a log trace".into()));
        };
        let mut sum = FlowSummary::default();
        let first = trace.samples[0];
        let last = trace.samples[trace.samples.len() - 1];
        sum.values.insert("steps".into(), trace.steps as f64);
        sum.values.insert("h2_initial".into(), first.h2);
        sum.values.insert("h2_final".into(), last.h2);
        sum.values.insert("mass_drift".into(), trace.max_mass_drift());
        sum.values.insert("stationarity_defect".into(), stationarity_defect(trace));
        sum.values.insert("entropy_weight".into(), trace.weight);
        sum.values.insert("eigenvalue".into(), trace.eigenvalue);
        sum.reports.push(h2_derivative_check(trace, config.tol("h2_derivative"))?);
        sum.reports.push(h2_monotonicity_check(trace, config.tol("h2_monotonicity"))?);
        Ok(sum)
    }
}

/// All flows, by name.
pub fn flow_registry() -> Vec<Box<dyn Flow>> {
    vec![Box::new(FastDiffusion), Box::new(CclFlow), Box::new(LogFlow)]
}

pub fn find_flow(name: &str) -> Result<Box<dyn Flow>> {
    flow_registry().into_iter().find(|f| f.name() == name).ok_or_else(|| {
        Error::Parse(format!(
            "unknown flow '{name}' (known: {})",
            flow_registry().iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
        ))
    })
}

/// The grid a flow runs on under `config`.
pub fn flow_grid(flow: &dyn Flow, config: &SuiteConfig) -> Result<Arc<RadialGrid>> {
    make_grid(config.d, config.r_max_for(flow.name()), config.n, config.spacing)
}

/// The configured profile, or the flow's default, on `grid`.
pub fn initial_datum(flow: &dyn Flow, config: &SuiteConfig, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    match &config.profile {
        Some(spec) => profile(spec, grid),
        None => flow.default_profile(grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_names_and_dimensions() {
        assert!(find_flow("fd").unwrap().validate(5).is_ok());
        assert!(find_flow("fd").unwrap().validate(2).is_err());
        assert!(find_flow("log").unwrap().validate(3).is_err());
        assert!(find_flow("log").unwrap().validate(2).is_ok());
        assert!(find_flow("fd-ccl").unwrap().validate(2).is_ok());
        assert!(find_flow("heat").is_err());
    }
}
