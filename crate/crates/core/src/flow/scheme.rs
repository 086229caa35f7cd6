//! Variable-step BDF2 integration of `V dv/dt = A w(v)` in the variable
//! `z = log v`.
//!
//! Working with `z` keeps `v = e^z` strictly positive; there is nothing to
//! clip. Each step solves the nonlinear system by Newton's method on a
//! tridiagonal Jacobian. Steps that fail to converge are retried with half
//! the step size.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::FvOperator;
use crate::tridiag::Tridiagonal;

/// The flux variable `w` as a function of `z = log v`.
pub trait Nonlinearity {
    fn w(&self, z: &[f64]) -> Vec<f64>;
    /// `dw/dz`, pointwise.
    fn dw(&self, z: &[f64]) -> Vec<f64>;
}

/// `w = v^m`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub m: f64,
}

impl Nonlinearity for PowerLaw {
    fn w(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|z| (self.m * z).exp()).collect()
    }

    fn dw(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|z| self.m * (self.m * z).exp()).collect()
    }
}

/// `w = log(v / mu) = z - log mu`.
#[derive(Debug, Clone)]
pub struct LogRatio {
    pub log_mu: Vec<f64>,
}

impl Nonlinearity for LogRatio {
    fn w(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.log_mu).map(|(z, l)| z - l).collect()
    }

    fn dw(&self, z: &[f64]) -> Vec<f64> {
        vec![1.0; z.len()]
    }
}

/// Step-size control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// First step.
    pub dt0: f64,
    /// Target relative change of `v` per step: `dt = eta / rate` with
    /// `rate = max |d log v / dt|`.
    pub eta: f64,
    /// Largest ratio between consecutive steps.
    pub growth: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    /// Newton tolerance on `max |dz|`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Halvings allowed for a single step before giving up.
    pub max_rejections: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt0: 1e-6,
            eta: 0.01,
            growth: 1.2,
            dt_max: f64::INFINITY,
            max_steps: 200_000,
            newton_tol: 1e-12,
            max_newton: 40,
            max_rejections: 30,
        }
    }
}

/// Integration state.
pub struct Stepper<'a, N: Nonlinearity> {
    op: &'a FvOperator,
    nl: &'a N,
    control: StepControl,
    pub t: f64,
    z: Vec<f64>,
    z_prev: Option<Vec<f64>>,
    dt_prev: f64,
    pub steps: usize,
    pub rejections: usize,
}

impl<'a, N: Nonlinearity> Stepper<'a, N> {
    pub fn new(op: &'a FvOperator, nl: &'a N, v0: &[f64], control: StepControl) -> Result<Self> {
        if let Some(i) = v0.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("initial datum must be positive and finite, node {i} holds {}", v0[i])));
        }
        Ok(Self {
            op,
            nl,
            control,
            t: 0.0,
            z: v0.iter().map(|v| v.ln()).collect(),
            z_prev: None,
            dt_prev: control.dt0,
            steps: 0,
            rejections: 0,
        })
    }

    pub fn v(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.exp()).collect()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// `max |d log v / dt|` over the grid.
    pub fn rate(&self) -> f64 {
        let aw = self.op.apply(&self.nl.w(&self.z));
        aw.iter()
            .zip(self.op.volumes())
            .zip(&self.z)
            .map(|((a, vol), z)| (a / (vol * z.exp())).abs())
            .fold(0.0, f64::max)
    }

    fn proposed_dt(&self) -> f64 {
        if self.z_prev.is_none() {
            return self.control.dt0;
        }
        let rate = self.rate();
        let target = if rate > 0.0 { self.control.eta / rate } else { self.control.dt_max };
        target.min(self.control.growth * self.dt_prev).min(self.control.dt_max)
    }

    /// Advances by one accepted step, never past `t_limit`. Returns the step
    /// size used.
    pub fn step(&mut self, t_limit: f64) -> Result<f64> {
        let mut dt = self.proposed_dt().min(t_limit - self.t);
        for _ in 0..=self.control.max_rejections {
            match self.try_step(dt) {
                Ok(z_new) => {
                    let z_old = std::mem::replace(&mut self.z, z_new);
                    self.z_prev = Some(z_old);
                    self.t += dt;
                    self.dt_prev = dt;
                    self.steps += 1;
                    return Ok(dt);
                }
                Err(reason) => {
                    debug!("step at t = {} with dt = {dt:e} rejected: {reason}", self.t);
                    self.rejections += 1;
                    dt *= 0.5;
                }
            }
        }
        Err(Error::FlowFailure {
            t: self.t,
            reason: format!("no convergent step after {} halvings", self.control.max_rejections),
        })
    }

    fn try_step(&self, dt: f64) -> std::result::Result<Vec<f64>, String> {
        let vol = self.op.volumes();
        let n = self.z.len();
        // BDF2 coefficients for the ratio omega = dt / dt_prev; the first step
        // is backward Euler.
        let (a0, a1, a2, guess) = match &self.z_prev {
            None => (1.0, -1.0, 0.0, self.z.clone()),
            Some(zp) => {
                let om = dt / self.dt_prev;
                let guess: Vec<f64> =
                    self.z.iter().zip(zp).map(|(z, p)| z + om * (z - p)).collect();
                ((1.0 + 2.0 * om) / (1.0 + om), -(1.0 + om), om * om / (1.0 + om), guess)
            }
        };
        let history: Vec<f64> = (0..n)
            .map(|i| {
                let mut h = a1 * self.z[i].exp();
                if let Some(zp) = &self.z_prev {
                    h += a2 * zp[i].exp();
                }
                vol[i] * h
            })
            .collect();
        let a = self.op.matrix();
        let mut z = guess;
        for _ in 0..self.control.max_newton {
            let w = self.nl.w(&z);
            let dw = self.nl.dw(&z);
            let aw = a.mul_vec(&w);
            let res: Vec<f64> = (0..n).map(|i| a0 * vol[i] * z[i].exp() + history[i] - dt * aw[i]).collect();
            // Jacobian a0 V diag(e^z) - dt A diag(dw).
            let mut jac = Tridiagonal::zeros(n);
            for i in 0..n {
                jac.diag[i] = a0 * vol[i] * z[i].exp() - dt * a.diag[i] * dw[i];
                if i + 1 < n {
                    jac.upper[i] = -dt * a.upper[i] * dw[i + 1];
                    jac.lower[i] = -dt * a.lower[i] * dw[i];
                }
            }
            let neg: Vec<f64> = res.iter().map(|r| -r).collect();
            let dz = jac.solve(&neg).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            for (zi, d) in z.iter_mut().zip(&dz) {
                // Damp very large updates; they only occur for steps that are
                // about to be rejected anyway.
                let d = d.clamp(-2.0, 2.0);
                *zi += d;
                worst = worst.max(d.abs());
            }
            if !worst.is_finite() {
                return Err("non-finite Newton update".into());
            }
            if worst < self.control.newton_tol {
                return Ok(z);
            }
        }
        Err("Newton iteration did not converge".into())
    }
}
