//! Onofri and logarithmic HLS deficits, and the Legendre gap between them.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profiles::moon_measure;
use crate::radial::{
    dirichlet_energy_with_tail, fitted_decay_exponent, integrate, integrate_with_tail, newton_potential, RadialField, RadialGrid,
    TailModel,
};

fn require_plane(grid: &RadialGrid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::Domain(format!("needs a two-dimensional grid, got d = {}", grid.dim())));
    }
    Ok(())
}

/// Quadrature weights for `int f d mu`, exact for constants: the interior
/// weights are rescaled so that they integrate `mu` to `1 - 1/(1 + R^2)`,
/// and the last node also carries the mass `1/(1 + R^2)` of `mu` beyond
/// `R`, i.e. `f` is continued as a constant.
#[derive(Debug, Clone)]
pub struct MuWeights {
    weights: Vec<f64>,
}

impl MuWeights {
    pub fn new(grid: &RadialGrid) -> Result<Self> {
        require_plane(grid)?;
        let r_max = grid.r_max();
        let raw: Vec<f64> = grid.nodes().iter().zip(grid.weights()).map(|(r, w)| w * moon_measure(*r)).collect();
        let total: f64 = raw.iter().sum();
        let outside = 1.0 / (1.0 + r_max * r_max);
        let mut weights: Vec<f64> = raw.iter().map(|w| w * (1.0 - outside) / total).collect();
        let n = weights.len();
        weights[n - 1] += outside;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int f d mu`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, f)| w * f).sum()
    }

    /// `log int e^f d mu`, evaluated as a log-sum-exp.
    pub fn log_integral_exp(&self, f: &[f64]) -> f64 {
        let top = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + self.integrate(&f.iter().map(|x| (x - top).exp()).collect::<Vec<_>>()).ln()
    }
}

/// A function `g` on `R^2` with the three integrals of the Onofri
/// inequality.
#[derive(Debug, Clone)]
pub struct OnofriInput {
    pub g: RadialField,
    /// `int |grad g|^2`.
    pub energy: f64,
    /// `int g d mu`.
    pub mean: f64,
    /// `log int e^g d mu`.
    pub log_exp_moment: f64,
}

impl OnofriInput {
    pub fn new(g: RadialField) -> Result<Self> {
        let mu = MuWeights::new(g.grid())?;
        // A power-law tail only for decaying g; for g tending to a nonzero
        // constant the gradient beyond R_max is negligible.
        let tail = match fitted_decay_exponent(&g) {
            Some(a) if a > 0.0 => TailModel::Fitted,
            _ => TailModel::None,
        };
        let energy = dirichlet_energy_with_tail(&g, tail)?;
        let mean = mu.integrate(g.values());
        let log_exp_moment = mu.log_integral_exp(g.values());
        if !(energy.is_finite() && mean.is_finite() && log_exp_moment.is_finite()) {
            return Err(Error::Domain("Onofri integrals are not finite".into()));
        }
        Ok(Self { g, energy, mean, log_exp_moment })
    }

    /// The same function shifted to `int g d mu = 0`.
    pub fn centered(&self) -> Result<Self> {
        Self::new(self.g.map(|x| x - self.mean)?)
    }
}

/// `(1/16 pi) int |grad g|^2 + int g d mu - log int e^g d mu`.
pub fn onofri_deficit(g: &OnofriInput) -> f64 {
    g.energy / (16.0 * PI) + g.mean - g.log_exp_moment
}

/// `int f log f`, with `0 log 0 = 0` and a fitted tail.
fn entropy(f: &RadialField) -> Result<f64> {
    integrate_with_tail(&f.map(|x| if x > 0.0 { x * x.ln() } else { 0.0 })?, TailModel::Fitted)
}

/// `int f (-Delta)^{-1} f` with the convolution potential.
fn hls_term(f: &RadialField) -> Result<f64> {
    let u = newton_potential(f)?;
    integrate_with_tail(&f.mul(&u)?, TailModel::Fitted)
}

/// `int f log(f/M) + (2/M) int int f(x) f(y) log|x-y| + M (1 + log pi)`,
/// with the double integral reduced to `-2 pi int f (-Delta)^{-1} f`.
pub fn loghls_deficit(f: &RadialField, mass: f64) -> Result<f64> {
    require_plane(f.grid())?;
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    if !f.is_nonnegative() {
        return Err(Error::Domain("log-HLS needs a nonnegative density".into()));
    }
    let total = integrate_with_tail(f, TailModel::Fitted)?;
    if !(total > 0.0) {
        return Err(Error::Domain("density has zero mass".into()));
    }
    Ok(entropy(f)? - total * mass.ln() - 4.0 * PI / mass * hls_term(f)? + mass * (1.0 + PI.ln()))
}

/// A nonnegative density on `R^2` renormalized to unit mass.
#[derive(Debug, Clone)]
pub struct MassOneDensity {
    v: RadialField,
    /// `int v log v` is finite on the grid.
    pub entropy_finite: bool,
    /// `int (1 + log|x|^2) v` is finite on the grid.
    pub log_moment_finite: bool,
}

impl MassOneDensity {
    pub fn new(v: RadialField) -> Result<Self> {
        require_plane(v.grid())?;
        if !v.is_nonnegative() {
            return Err(Error::Domain("density must be nonnegative".into()));
        }
        let mass = integrate_with_tail(&v, TailModel::Fitted)?;
        if !(mass > 0.0) {
            return Err(Error::Domain("density has zero mass".into()));
        }
        let v = v.scale(1.0 / mass)?;
        let entropy_finite = entropy(&v).map(|e| e.is_finite()).unwrap_or(false);
        let log_moment_finite = integrate_with_tail(&v.map_with_r(|r, x| (1.0 + (r * r).max(1e-300).ln()) * x)?, TailModel::Fitted)
            .map(|e| e.is_finite())
            .unwrap_or(false);
        Ok(Self { v, entropy_finite, log_moment_finite })
    }

    /// `mu` itself.
    pub fn moon(grid: &Arc<RadialGrid>) -> Result<Self> {
        Self::new(RadialField::from_fn(grid.clone(), moon_measure)?)
    }

    /// `mu e^g`, renormalized.
    pub fn perturbed_moon(g: &RadialField) -> Result<Self> {
        Self::new(g.map_with_r(|r, x| moon_measure(r) * x.exp())?)
    }

    pub fn field(&self) -> &RadialField {
        &self.v
    }

    pub fn into_field(self) -> RadialField {
        self.v
    }
}

/// The two terms `int v log(v/mu)` and `int (v - mu) (-Delta)^{-1} (v - mu)`.
fn relative_terms(v: &MassOneDensity) -> Result<(f64, f64)> {
    let f = v.field();
    let mu = RadialField::from_fn(f.grid().clone(), moon_measure)?;
    let rel = f.map_with_r(|r, x| if x > 0.0 { x * (x / moon_measure(r)).ln() } else { 0.0 })?;
    let relative_entropy = integrate_with_tail(&rel, TailModel::Fitted)?;
    let diff = f.sub(&mu)?;
    let u = newton_potential(&diff)?;
    // The potential of a mass-free density decays; no tail is needed.
    let energy = integrate(&diff.mul(&u)?);
    Ok((relative_entropy, energy))
}

/// `int v log(v/mu) - 4 pi int (v - mu) (-Delta)^{-1} (v - mu)`.
pub fn legendre_gap(v: &MassOneDensity) -> Result<f64> {
    let (ent, energy) = relative_terms(v)?;
    Ok(ent - 4.0 * PI * energy)
}

/// `H_2[v] = int (v - mu) (-Delta)^{-1} (v - mu) - (1/4 pi) int v log(v/mu)`.
pub fn compute_h2(v: &MassOneDensity) -> Result<f64> {
    let (ent, energy) = relative_terms(v)?;
    Ok(energy - ent / (4.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::bump;
    use crate::radial::{make_grid, Spacing};

    fn plane() -> Arc<RadialGrid> {
        make_grid(2, 1e4, 1024, Spacing::LogStretched).unwrap()
    }

    #[test]
    fn mu_weights_integrate_constants_exactly() {
        let mu = MuWeights::new(&plane()).unwrap();
        assert!((mu.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn onofri_deficit_vanishes_on_constants() {
        let g = plane();
        for c in [0.0, 1.0, -2.0] {
            let input = OnofriInput::new(RadialField::constant(g.clone(), c).unwrap()).unwrap();
            assert!(onofri_deficit(&input).abs() < 1e-13, "c = {c}");
        }
    }

    #[test]
    fn loghls_deficit_vanishes_at_mu_and_is_homogeneous() {
        let g = plane();
        let mu = RadialField::from_fn(g.clone(), moon_measure).unwrap();
        assert!(loghls_deficit(&mu, 1.0).unwrap().abs() < 1e-5);
        let f = MassOneDensity::perturbed_moon(&RadialField::from_fn(g, |r| 0.5 * bump(r, 1.0)).unwrap()).unwrap();
        let one = loghls_deficit(f.field(), 1.0).unwrap();
        let two = loghls_deficit(&f.field().scale(2.0).unwrap(), 2.0).unwrap();
        // Exact up to the fitted entropy tail, which is not linear in f
        // (2f log 2f mixes two decay rates): ~1e-8 beyond R = 1e4.
        assert!((two - 2.0 * one).abs() < 1e-7);
        assert!(one > 0.0);
    }

    #[test]
    fn h2_is_minus_gap_over_four_pi() {
        let g = plane();
        let v = MassOneDensity::perturbed_moon(&RadialField::from_fn(g, |r| -0.7 * bump(r, 0.5)).unwrap()).unwrap();
        let gap = legendre_gap(&v).unwrap();
        let h2 = compute_h2(&v).unwrap();
        assert!((gap + 4.0 * PI * h2).abs() < 1e-10);
        assert!(gap > 0.0);
    }
}
