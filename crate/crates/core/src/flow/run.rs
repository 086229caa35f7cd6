//! Integration of `v_t = Delta v^m` to extinction and the resulting trace.

use std::fmt::Write as _;
use std::sync::Arc;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::functionals::{FunctionalSample, FvFunctionals};
use crate::flow::scheme::{PowerLaw, StepControl, Stepper};
use crate::radial::{Boundary, FvOperator, RadialField, RadialGrid};

/// Number of trailing samples used to extrapolate the extinction time.
pub const EXTINCTION_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub m: f64,
    pub control: StepControl,
    /// Stop once `J < eps_ext J(0)`.
    pub eps_ext: f64,
    /// Stop at this time (flows that do not vanish).
    pub t_end: Option<f64>,
    /// Sobolev constant used in `H` and `H'`.
    pub sobolev: SobolevConstant,
    /// Condition at `R_max`; `None` selects [`default_boundary`].
    pub boundary: Option<Boundary>,
    /// Requested snapshot times, in addition to the automatic ones.
    pub snapshot_times: Vec<f64>,
    /// Automatic snapshots are stored whenever `J` dropped by this factor
    /// since the previous one.
    pub snapshot_ratio: f64,
}

impl FlowParams {
    pub fn new(m: f64, sobolev: SobolevConstant) -> Self {
        Self {
            m,
            control: StepControl::default(),
            eps_ext: 1e-4,
            t_end: None,
            sobolev,
            boundary: None,
            snapshot_times: Vec::new(),
            snapshot_ratio: 1.25,
        }
    }

    /// True for the two exponents the theory covers.
    pub fn in_scope(&self, d: usize) -> bool {
        let d = d as f64;
        (self.m - (d - 2.0) / (d + 2.0)).abs() < 1e-12 || (self.m - d / (d + 2.0)).abs() < 1e-12
    }
}

/// The constant `S` entering `H = int v (-Delta)^{-1} v - S ||v||^2` and
/// `H' = 2J(SQ - 1)`.
///
/// On a grid the quotient `Q` is minimized by a discrete optimizer whose
/// value depends, at order `h^2`, on the dilation it settles at; each
/// trajectory keeps its own dilation up to extinction. `Realized` uses
/// `S = 1 / Q(t_last)`, the constant that trajectory's own limit profile
/// makes sharp, so that the discrete `H' >= 0` and `H <= 0` are not masked by
/// the `O(h^2)` gap to the continuum constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevConstant {
    Fixed(f64),
    Realized,
}

/// Exterior condition: `w = v^m` is continued harmonically beyond `R_max`
/// (`w ~ r^{2-d}`), which is exact for the separated solution. In `d = 2`
/// there is no decaying harmonic function and a zero-flux wall is used.
pub fn default_boundary(d: usize) -> Boundary {
    if d >= 3 {
        Boundary::Robin { k: d as f64 - 2.0 }
    } else {
        Boundary::Neumann
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Extinct,
    EndTime,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrace {
    pub d: usize,
    pub m: f64,
    /// The constant `h` and `h_prime` were evaluated with.
    pub sobolev: f64,
    pub samples: Vec<FunctionalSample>,
    pub snapshots: Vec<Snapshot>,
    /// Extrapolated extinction time.
    pub t_hat: Option<f64>,
    pub termination: Termination,
    pub steps: usize,
    pub rejections: usize,
    pub dt0: f64,
    #[serde(skip)]
    pub grid: Option<Arc<RadialGrid>>,
}

impl FlowTrace {
    pub fn first(&self) -> &FunctionalSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &FunctionalSample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column(&self, f: impl Fn(&FunctionalSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Re-evaluates `H` and `H'` at every sample with the constant `s`.
    pub fn rescore(&mut self, s: f64) {
        self.sobolev = s;
        for x in &mut self.samples {
            x.h = x.hls_term - s * x.norm_term;
            x.h_prime = 2.0 * x.j * (s * x.q - 1.0);
        }
    }

    pub fn snapshot_field(&self, s: &Snapshot) -> Result<RadialField> {
        let grid = self.grid.clone().ok_or_else(|| Error::Domain("trace carries no grid".into()))?;
        RadialField::new(grid, s.values.clone())
    }

    /// CSV with columns `t,J,Q,Lambda,K,H,Hprime,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,J,Q,Lambda,K,H,Hprime,mass\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.j, s.q, s.lambda, s.k, s.h, s.h_prime, s.mass
            );
        }
        out
    }
}

/// Least-squares line through `(t, J^{2/d})` over the last samples; returns
/// its zero crossing.
pub fn extrapolate_extinction(samples: &[FunctionalSample], d: usize) -> Option<f64> {
    let tail: Vec<&FunctionalSample> =
        samples.iter().rev().take(EXTINCTION_FIT_SAMPLES).filter(|s| s.j > 0.0).collect();
    if tail.len() < 3 {
        return None;
    }
    let k = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.j.powf(2.0 / d as f64)).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    Some(mx - my / slope)
}

/// Integrates the flow from `v0` until `J < eps_ext J(0)`, `t_end` or the
/// step budget.
pub fn run_flow(v0: &RadialField, params: &FlowParams) -> Result<FlowTrace> {
    run_flow_with(v0, params, |_, _| Ok(()))
}

/// [`run_flow`], calling `observe(t, v)` on the initial datum and after
/// every accepted step.
pub fn run_flow_with(
    v0: &RadialField,
    params: &FlowParams,
    mut observe: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<FlowTrace> {
    let grid = v0.grid().clone();
    let d = grid.dim();
    if !(params.m > 0.0 && params.m < 1.0) {
        return Err(Error::Domain(format!("exponent m must lie in (0, 1), got {}", params.m)));
    }
    if !params.in_scope(d) {
        info!("m = {} is outside the exponents covered by the theory for d = {d}", params.m);
    }
    if v0.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(
            "initial datum must be strictly positive on the grid (the scheme evolves log v)".into(),
        ));
    }
    let boundary = params.boundary.unwrap_or_else(|| default_boundary(d));
    let op = FvOperator::new(&grid, boundary);
    let sobolev = match params.sobolev {
        SobolevConstant::Fixed(s) => s,
        SobolevConstant::Realized => 1.0,
    };
    let exterior = Boundary::Robin { k: d as f64 - 2.0 };
    let poisson_op = (d >= 3 && boundary != exterior).then(|| FvOperator::new(&grid, exterior));
    let poisson = if d >= 3 { Some(poisson_op.as_ref().unwrap_or(&op)) } else { None };
    let fun = FvFunctionals { op: &op, poisson, grid: &grid, m: params.m, sobolev };
    let nl = PowerLaw { m: params.m };
    let mut stepper = Stepper::new(&op, &nl, v0.values(), params.control)?;

    let first = fun.sample(0.0, v0.values())?;
    observe(0.0, v0.values())?;
    let j0 = first.j;
    let mut samples = vec![first];
    let mut snapshots = vec![Snapshot { t: 0.0, values: v0.values().to_vec() }];
    let mut last_snap_j = j0;
    let mut pending: Vec<f64> = params.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();

    let t_limit = params.t_end.unwrap_or(f64::INFINITY);
    let termination = loop {
        if stepper.steps >= params.control.max_steps {
            break Termination::MaxSteps;
        }
        if stepper.t >= t_limit {
            break Termination::EndTime;
        }
        stepper.step(t_limit)?;
        let v = stepper.v();
        let s = fun.sample(stepper.t, &v).map_err(|e| Error::FlowFailure {
            t: stepper.t,
            reason: e.to_string(),
        })?;
        observe(stepper.t, &v)?;
        let mut snap = s.j * params.snapshot_ratio <= last_snap_j;
        while pending.last().is_some_and(|&ts| ts <= stepper.t) {
            pending.pop();
            snap = true;
        }
        let extinct = s.j < params.eps_ext * j0;
        if snap || extinct {
            snapshots.push(Snapshot { t: s.t, values: v });
            last_snap_j = s.j;
        }
        samples.push(s);
        if extinct {
            break Termination::Extinct;
        }
    };
    let t_hat = match termination {
        Termination::Extinct => extrapolate_extinction(&samples, d),
        _ => None,
    };
    let mut trace = FlowTrace {
        d,
        m: params.m,
        sobolev,
        samples,
        snapshots,
        t_hat,
        termination,
        steps: stepper.steps,
        rejections: stepper.rejections,
        dt0: params.control.dt0,
        grid: Some(grid),
    };
    if params.sobolev == SobolevConstant::Realized {
        let s = 1.0 / trace.last().q;
        trace.rescore(s);
    }
    Ok(trace)
}
