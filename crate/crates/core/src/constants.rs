//! Optimal constants of the Sobolev and Gagliardo-Nirenberg inequalities,
//! computed as the inequality quotients evaluated at the closed-form
//! optimizers.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{self, theta};
use crate::radial::{
    dirichlet_energy_with_tail, l2_norm, lp_norm_with_tail, make_grid, radial_laplacian, RadialField,
    RadialGrid, Spacing, TailModel,
};

/// Largest relative residual of `Delta F + d(d-2) F^{(d+2)/(d-2)}` accepted
/// before a grid is declared too coarse to evaluate constants.
pub const MAX_PROFILE_RESIDUAL: f64 = 1e-3;

/// Grid used to evaluate optimal constants. The far field matters (the
/// optimizers decay algebraically), so the default reaches `R = 1e6` and
/// completes integrals with fitted power-law tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsGrid {
    pub n: usize,
    pub r_max: f64,
    pub spacing: Spacing,
}

impl Default for ConstantsGrid {
    fn default() -> Self {
        Self { n: 4096, r_max: 1e6, spacing: Spacing::LogStretched }
    }
}

impl ConstantsGrid {
    pub fn build(&self, d: usize) -> Result<Arc<RadialGrid>> {
        make_grid(d, self.r_max, self.n, self.spacing)
    }
}

fn on_dim(d: usize, grid: &Arc<RadialGrid>) -> Result<Arc<RadialGrid>> {
    if grid.dim() == d {
        Ok(grid.clone())
    } else {
        grid.with_dim(d).map(Arc::new)
    }
}

/// Relative `L^2` residual of `Delta F + d(d-2) F^{(d+2)/(d-2)}` for the
/// Aubin-Talenti profile on `grid`.
pub fn aubin_talenti_residual(grid: &Arc<RadialGrid>) -> Result<f64> {
    let d = grid.dim();
    let q = (d as f64 + 2.0) / (d as f64 - 2.0);
    let f = RadialField::from_fn(grid.clone(), |r| profiles::aubin_talenti(r, d))?;
    let fq = f.map(|v| v.powf(q))?;
    let lap = radial_laplacian(&f)?;
    let res = lap.zip_map(&fq, |a, b| a + (d * (d - 2)) as f64 * b)?;
    Ok(l2_norm(&res) / l2_norm(&fq))
}

/// `S_d = ||F||_{2d/(d-2)}^2 / ||grad F||_2^2` at the Aubin-Talenti profile.
pub fn sobolev_constant(d: usize, grid: &Arc<RadialGrid>) -> Result<f64> {
    if d < 3 {
        return Err(Error::Domain(format!("the Sobolev constant needs d >= 3, got {d}")));
    }
    let grid = on_dim(d, grid)?;
    let residual = aubin_talenti_residual(&grid)?;
    if residual > MAX_PROFILE_RESIDUAL {
        return Err(Error::UnderResolved(format!(
            "Aubin-Talenti residual {residual:.2e} exceeds {MAX_PROFILE_RESIDUAL:.0e}; refine the grid"
        )));
    }
    let f = RadialField::from_fn(grid.clone(), |r| profiles::aubin_talenti(r, d))?;
    let p = 2.0 * d as f64 / (d as f64 - 2.0);
    let num = lp_norm_with_tail(&f, p, TailModel::Fitted)?.powi(2);
    let den = dirichlet_energy_with_tail(&f, TailModel::Fitted)?;
    Ok(num / den)
}

/// The Gagliardo-Nirenberg quotient
/// `||f||_{2p} / (||grad f||_2^theta ||f||_{p+1}^{1-theta})` on `grid`.
pub fn gn_quotient(f: &RadialField, p: f64) -> Result<f64> {
    let th = theta(p, f.dim())?;
    let top = lp_norm_with_tail(f, 2.0 * p, TailModel::Fitted)?;
    let grad = dirichlet_energy_with_tail(f, TailModel::Fitted)?.sqrt();
    let low = lp_norm_with_tail(f, p + 1.0, TailModel::Fitted)?;
    Ok(top / (grad.powf(th) * low.powf(1.0 - th)))
}

/// `C_{p,d}`: the Gagliardo-Nirenberg quotient at `F_p`.
pub fn gn_constant(p: f64, d: usize, grid: &Arc<RadialGrid>) -> Result<f64> {
    profiles::check_gn_window(p, d)?;
    let grid = on_dim(d, grid)?;
    let f = RadialField::from_fn(grid, |r| profiles::gn_optimizer(r, p))?;
    gn_quotient(&f, p)
}

/// Thread-safe cache of constants evaluated on a fixed [`ConstantsGrid`].
#[derive(Debug, Default)]
pub struct ConstantsTable {
    grid: ConstantsGrid,
    sobolev: Mutex<BTreeMap<usize, f64>>,
    gn: Mutex<BTreeMap<(u64, usize), f64>>,
}

impl ConstantsTable {
    pub fn new(grid: ConstantsGrid) -> Self {
        Self { grid, ..Default::default() }
    }

    pub fn grid(&self) -> ConstantsGrid {
        self.grid
    }

    pub fn sobolev(&self, d: usize) -> Result<f64> {
        if let Some(s) = self.sobolev.lock().expect("constants cache poisoned").get(&d) {
            return Ok(*s);
        }
        let s = sobolev_constant(d, &self.grid.build(d)?)?;
        self.sobolev.lock().expect("constants cache poisoned").insert(d, s);
        Ok(s)
    }

    pub fn gn(&self, p: f64, d: usize) -> Result<f64> {
        let key = (p.to_bits(), d);
        if let Some(c) = self.gn.lock().expect("constants cache poisoned").get(&key) {
            return Ok(*c);
        }
        let c = gn_constant(p, d, &self.grid.build(d)?)?;
        self.gn.lock().expect("constants cache poisoned").insert(key, c);
        Ok(c)
    }

    pub fn theta(&self, p: f64, d: usize) -> Result<f64> {
        theta(p, d)
    }
}
