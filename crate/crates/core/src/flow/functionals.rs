//! Functionals of a density `v` along `v_t = Delta v^m`:
//!
//! * `J = int v^{m+1}`, `D = ||grad v^m||_2^2`, `Lambda = D / J`,
//! * `Q = D J^{-(d-2)/d}`,
//! * `K = int v^{m-1} |Delta v^m + Lambda v|^2`,
//! * `H = int v (-Delta)^{-1} v - S_d ||v||_{2d/(d+2)}^2`,
//! * `H' = 2 J (S_d Q - 1)`.
//!
//! [`FvFunctionals`] evaluates them with the same finite-volume operator the
//! flow is integrated with, so that the time derivatives of `J`, `Q` and `H`
//! along the discrete flow equal the discrete right-hand sides exactly up to
//! time-stepping error. [`functionals`] evaluates them from the high-order
//! quadrature primitives and serves as an independent cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{
    dirichlet_energy_with_tail, integrate, integrate_with_tail, newton_potential, radial_laplacian,
    sup_weighted_norm, FvOperator, RadialField, RadialGrid, TailModel,
};

/// Density below which the integrand of `K` is set to zero (`v^{m-1}` is
/// singular at `v = 0`).
pub const K_MASK_THRESHOLD: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub t: f64,
    pub j: f64,
    pub q: f64,
    pub lambda: f64,
    pub k: f64,
    pub h: f64,
    pub h_prime: f64,
    pub mass: f64,
    /// `||grad v^m||_2^2`.
    pub energy: f64,
    /// `int v (-Delta)^{-1} v`.
    pub hls_term: f64,
    /// `||v||_{2d/(d+2)}^2`.
    pub norm_term: f64,
    /// `sup (1 + r^2)^{d+2} v`.
    pub sup_weighted: f64,
    /// Share of the `K` integrand discarded by the small-density mask.
    pub k_masked_fraction: f64,
}

/// Flow functionals evaluated with a finite-volume operator.
pub struct FvFunctionals<'a> {
    pub op: &'a FvOperator,
    /// Operator used for `(-Delta)^{-1}`; usually the flow operator itself.
    /// Without one (`d = 2`, where a zero-flux wall admits no potential of
    /// a positive density) `H` is reported as NaN.
    pub poisson: Option<&'a FvOperator>,
    pub grid: &'a RadialGrid,
    pub m: f64,
    pub sobolev: f64,
}

impl FvFunctionals<'_> {
    pub fn sample(&self, t: f64, v: &[f64]) -> Result<FunctionalSample> {
        let d = self.grid.dim() as f64;
        let m = self.m;
        let vol = self.op.volumes();
        let w: Vec<f64> = v.iter().map(|x| x.powf(m)).collect();
        let aw = self.op.apply(&w);
        let j: f64 = vol.iter().zip(v).zip(&w).map(|((a, v), w)| a * v * w).sum();
        if !(j > 0.0) {
            return Err(Error::Extinct(j));
        }
        let energy = self.op.energy(&w);
        let lambda = energy / j;
        let q = energy * j.powf(-(d - 2.0) / d);
        let (mut k, mut masked) = (0.0, 0.0);
        for i in 0..v.len() {
            let lap = aw[i] / vol[i];
            let term = vol[i] * (lap + lambda * v[i]).powi(2);
            if v[i] < K_MASK_THRESHOLD {
                masked += term;
            } else {
                k += term * v[i].powf(m - 1.0);
            }
        }
        let hls_term = match self.poisson {
            Some(p) => {
                let u = p.solve_poisson(v)?;
                vol.iter().zip(v).zip(&u).map(|((a, v), u)| a * v * u).sum()
            }
            None => f64::NAN,
        };
        let p = 2.0 * d / (d + 2.0);
        let norm_term = self.op.integrate(&v.iter().map(|x| x.powf(p)).collect::<Vec<_>>()).powf(2.0 / p);
        let h = hls_term - self.sobolev * norm_term;
        let h_prime = 2.0 * j * (self.sobolev * q - 1.0);
        let mass = self.op.integrate(v);
        let sup_weighted = self
            .grid
            .nodes()
            .iter()
            .zip(v)
            .map(|(r, v)| (1.0 + r * r).powf(d + 2.0) * v.abs())
            .fold(0.0, f64::max);
        Ok(FunctionalSample {
            t,
            j,
            q,
            lambda,
            k,
            h,
            h_prime,
            mass,
            energy,
            hls_term,
            norm_term,
            sup_weighted,
            k_masked_fraction: if k > 0.0 { masked / k } else { 0.0 },
        })
    }
}

/// The flow functionals of `v` computed from the quadrature primitives
/// (fourth-order integrals with fitted tails, second-order Laplacian).
pub fn functionals(v: &RadialField, m: f64, sobolev: f64) -> Result<FunctionalSample> {
    if !v.is_nonnegative() {
        return Err(Error::Domain("functionals need a nonnegative density".into()));
    }
    let d = v.dim() as f64;
    let vm1 = v.map(|x| x.powf(m + 1.0))?;
    let j = integrate_with_tail(&vm1, TailModel::Fitted)?;
    if !(j > 0.0) {
        return Err(Error::Extinct(j));
    }
    let w = v.map(|x| x.powf(m))?;
    let energy = dirichlet_energy_with_tail(&w, TailModel::Fitted)?;
    let lambda = energy / j;
    let q = energy * j.powf(-(d - 2.0) / d);
    let lap = radial_laplacian(&w)?;
    let mut kv = Vec::with_capacity(v.len());
    let mut masked_v = Vec::with_capacity(v.len());
    for (&x, &l) in v.values().iter().zip(lap.values()) {
        let term = (l + lambda * x).powi(2);
        if x < K_MASK_THRESHOLD {
            kv.push(0.0);
            masked_v.push(term);
        } else {
            kv.push(x.powf(m - 1.0) * term);
            masked_v.push(0.0);
        }
    }
    let k = integrate(&RadialField::new(v.grid().clone(), kv)?);
    let masked = integrate(&RadialField::new(v.grid().clone(), masked_v)?);
    let u = newton_potential(v)?;
    let hls_term = integrate(&v.mul(&u)?);
    let p = 2.0 * d / (d + 2.0);
    let norm_term = integrate_with_tail(&v.map(|x| x.powf(p))?, TailModel::Fitted)?.powf(2.0 / p);
    Ok(FunctionalSample {
        t: 0.0,
        j,
        q,
        lambda,
        k,
        h: hls_term - sobolev * norm_term,
        h_prime: 2.0 * j * (sobolev * q - 1.0),
        mass: integrate(v),
        energy,
        hls_term,
        norm_term,
        sup_weighted: sup_weighted_norm(v),
        k_masked_fraction: if k > 0.0 { masked / k } else { 0.0 },
    })
}
