//! Radial grids on `[0, R_max]` with quadrature weights for integration over
//! the ambient space `R^d`.
//!
//! Every grid is the image of a uniform grid in a computational coordinate
//! `s` under a smooth map `r = phi(s)`:
//!
//! * `Uniform`: `r = s`,
//! * `LogStretched`: `r = exp(s) - 1`, i.e. uniform in `log(1 + r)`.
//!
//! Integrals are computed in `s` with a fourth-order rule built from
//! piecewise cubic interpolation, which also provides cumulative integrals
//! for the Newton potential. Derivatives for gradient energies use fourth
//! order differences in `s`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted number of nodes.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Uniform,
    LogStretched,
}

impl Spacing {
    fn to_r(self, s: f64) -> f64 {
        match self {
            Spacing::Uniform => s,
            Spacing::LogStretched => s.exp_m1(),
        }
    }

    fn to_s(self, r: f64) -> f64 {
        match self {
            Spacing::Uniform => r,
            Spacing::LogStretched => r.ln_1p(),
        }
    }

    /// `dr/ds` as a function of `r`.
    fn jacobian(self, r: f64) -> f64 {
        match self {
            Spacing::Uniform => 1.0,
            Spacing::LogStretched => 1.0 + r,
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Uniform => "uniform",
            Spacing::LogStretched => "log-stretched",
        })
    }
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(Spacing::Uniform),
            "log" | "log-stretched" => Ok(Spacing::LogStretched),
            other => Err(Error::Parse(format!("unknown grid spacing '{other}'"))),
        }
    }
}

/// Surface area `|S^{d-1}|` of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(d - 2) / (d as f64 - 2.0),
    }
}

/// Discretization of `[0, R_max]` for radial functions on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    spacing: Spacing,
    r_max: f64,
    step: f64,
    nodes: Vec<f64>,
    jacobian: Vec<f64>,
    weights: Vec<f64>,
    sphere_area: f64,
}

/// Builds a grid of `n` nodes with `r_0 = 0` and `r_{n-1} = r_max`.
pub fn make_grid(d: usize, r_max: f64, n: usize, spacing: Spacing) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(d, r_max, n, spacing).map(Arc::new)
}

impl RadialGrid {
    pub fn new(d: usize, r_max: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidGrid(format!("dimension must be >= 2, got {d}")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes for usable resolution, got {n}"
            )));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("R_max must be positive and finite, got {r_max}")));
        }
        let s_max = spacing.to_s(r_max);
        let step = s_max / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| spacing.to_r(i as f64 * step)).collect();
        nodes[0] = 0.0;
        nodes[n - 1] = r_max;
        for w in nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidGrid(format!(
                    "nodes not strictly increasing near r = {}; R_max too large for n",
                    w[0]
                )));
            }
        }
        let jacobian: Vec<f64> = nodes.iter().map(|&r| spacing.jacobian(r)).collect();
        let area = sphere_area(d);
        let coeffs = quadrature_coefficients(n);
        let weights = nodes
            .iter()
            .zip(&jacobian)
            .zip(&coeffs)
            .map(|((&r, &j), &c)| area * r.powi(d as i32 - 1) * j * c * step)
            .collect();
        Ok(Self { dim: d, spacing, r_max, step, nodes, jacobian, weights, sphere_area: area })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights: `sum_i w_i f(r_i) ~ |S^{d-1}| int_0^R f r^{d-1} dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Uniform step in the computational coordinate.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// `dr/ds` at every node.
    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// Radius at computational coordinate `s`.
    pub fn r_at(&self, s: f64) -> f64 {
        self.spacing.to_r(s)
    }

    /// Face radius between nodes `i` and `i + 1` (midpoint in `s`).
    pub fn face(&self, i: usize) -> f64 {
        self.spacing.to_r((i as f64 + 0.5) * self.step)
    }

    /// `|S^{d-1}| r^{d-1} dr/ds` at node `i`: converts an integrand in `R^d`
    /// into an integrand in `s`.
    pub fn measure_density(&self, i: usize) -> f64 {
        self.sphere_area * self.nodes[i].powi(self.dim as i32 - 1) * self.jacobian[i]
    }

    /// Returns a copy of this grid with a different dimension tag. Nodes are
    /// identical; weights are rebuilt.
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        Self::new(d, self.r_max, self.len(), self.spacing)
    }

    /// Fourth-order integral in `s` of values sampled at the nodes.
    pub fn integrate_in_s(&self, g: &[f64]) -> f64 {
        quadrature_coefficients(g.len())
            .iter()
            .zip(g)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            * self.step
    }

    /// Cumulative integral `G_i = int_{s_0}^{s_i} g ds` (fourth order).
    pub fn cumulative_in_s(&self, g: &[f64]) -> Vec<f64> {
        cumulative(self.step, g)
    }

    /// Fourth-order derivative `dg/ds` at every node.
    pub fn derivative_in_s(&self, g: &[f64]) -> Vec<f64> {
        derivative(self.step, g)
    }

    /// Fourth-order radial derivative `dg/dr`.
    pub fn derivative_in_r(&self, g: &[f64]) -> Vec<f64> {
        self.derivative_in_s(g).iter().zip(&self.jacobian).map(|(gs, j)| gs / j).collect()
    }
}

/// Per-interval integral of the cubic through four consecutive samples.
fn interval_integral(h: f64, g: &[f64], i: usize) -> f64 {
    let n = g.len();
    if i == 0 {
        h * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]) / 24.0
    } else if i + 2 >= n {
        h * (g[n - 4] - 5.0 * g[n - 3] + 19.0 * g[n - 2] + 9.0 * g[n - 1]) / 24.0
    } else {
        h * (-g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2]) / 24.0
    }
}

fn cumulative(h: f64, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        out[i + 1] = out[i] + interval_integral(h, g, i);
    }
    out
}

/// Weights (in units of the step) whose dot product reproduces the last
/// entry of [`cumulative`].
fn quadrature_coefficients(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for i in 0..n - 1 {
        let (idx, w): ([usize; 4], [f64; 4]) = if i == 0 {
            ([0, 1, 2, 3], [9.0, 19.0, -5.0, 1.0])
        } else if i + 2 >= n {
            ([n - 4, n - 3, n - 2, n - 1], [1.0, -5.0, 19.0, 9.0])
        } else {
            ([i - 1, i, i + 1, i + 2], [-1.0, 13.0, 13.0, -1.0])
        };
        for (k, wk) in idx.iter().zip(w) {
            c[*k] += wk / 24.0;
        }
    }
    c
}

fn derivative(h: f64, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    let s = 12.0 * h;
    out[0] = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / s;
    out[1] = (-3.0 * g[0] - 10.0 * g[1] + 18.0 * g[2] - 6.0 * g[3] + g[4]) / s;
    for i in 2..n - 2 {
        out[i] = (g[i - 2] - 8.0 * g[i - 1] + 8.0 * g[i + 1] - g[i + 2]) / s;
    }
    let m = n - 1;
    out[m - 1] = (3.0 * g[m] + 10.0 * g[m - 1] - 18.0 * g[m - 2] + 6.0 * g[m - 3] - g[m - 4]) / s;
    out[m] = (25.0 * g[m] - 48.0 * g[m - 1] + 36.0 * g[m - 2] - 16.0 * g[m - 3] + 3.0 * g[m - 4]) / s;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_ordering() {
        let g = make_grid(3, 10.0, 64, Spacing::Uniform).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes()[63], 10.0);
        let g = make_grid(5, 1e6, 512, Spacing::LogStretched).unwrap();
        assert_eq!(g.nodes()[511], 1e6);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(3, 1.0, 15, Spacing::Uniform).is_err());
        assert!(make_grid(3, 0.0, 64, Spacing::Uniform).is_err());
        assert!(make_grid(3, -1.0, 64, Spacing::Uniform).is_err());
        assert!(make_grid(1, 1.0, 64, Spacing::Uniform).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn ball_volume_d3() {
        for spacing in [Spacing::Uniform, Spacing::LogStretched] {
            let g = make_grid(3, 1.0, 1024, spacing).unwrap();
            let vol: f64 = g.weights().iter().sum();
            let exact = 4.0 * PI / 3.0;
            assert!(((vol - exact) / exact).abs() < 1e-8, "{spacing}: {vol}");
        }
    }

    #[test]
    fn derivative_is_fourth_order() {
        let errs: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&n| {
                let g = make_grid(3, 4.0, n, Spacing::LogStretched).unwrap();
                let f: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
                let df = g.derivative_in_r(&f);
                g.nodes()
                    .iter()
                    .zip(&df)
                    .map(|(r, d)| (d + 2.0 * r * (-r * r).exp()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn parses_spacing() {
        assert_eq!("log".parse::<Spacing>().unwrap(), Spacing::LogStretched);
        assert_eq!("log_stretched".parse::<Spacing>().unwrap(), Spacing::LogStretched);
        assert_eq!("Uniform".parse::<Spacing>().unwrap(), Spacing::Uniform);
        assert!("cubic".parse::<Spacing>().is_err());
    }
}
