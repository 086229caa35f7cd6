//! Conservative finite-volume discretization of the radial Laplacian.
//!
//! Node `i` owns the shell between the neighbouring face radii (faces sit at
//! midpoints of the grid coordinate). The discrete operator `A` maps nodal
//! values to net fluxes, so that `V^{-1} A w ~ Delta w`, where `V` holds the
//! shell volumes. `A` is symmetric and negative semi-definite, which makes
//! the discrete versions of the energy identities exact:
//!
//! * `sum_i V_i (V^{-1} A w)_i = boundary flux`,
//! * `-w^T A w = sum_faces a (w_{i+1} - w_i)^2 + boundary term`.
//!
//! Flows and their functionals are built on this operator so that
//! semi-discrete identities hold up to time-integration error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::grid::RadialGrid;
use crate::tridiag::Tridiagonal;

/// Condition imposed at `r = R_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// Zero flux.
    Neumann,
    /// `w'(R) = -k w(R) / R`, the condition satisfied by `r^{-k}` tails.
    Robin { k: f64 },
}

#[derive(Debug, Clone)]
pub struct FvOperator {
    volumes: Vec<f64>,
    faces: Vec<f64>,
    boundary_coeff: f64,
    boundary: Boundary,
}

impl FvOperator {
    pub fn new(grid: &RadialGrid, boundary: Boundary) -> Self {
        let n = grid.len();
        let d = grid.dim() as i32;
        let area = grid.sphere_area();
        let r = grid.nodes();
        let face_r: Vec<f64> = (0..n - 1).map(|i| grid.face(i)).collect();
        let ball = |x: f64| area / d as f64 * x.powi(d);
        let mut volumes = vec![0.0; n];
        volumes[0] = ball(face_r[0]);
        for i in 1..n - 1 {
            volumes[i] = ball(face_r[i]) - ball(face_r[i - 1]);
        }
        volumes[n - 1] = ball(grid.r_max()) - ball(face_r[n - 2]);
        let faces = (0..n - 1).map(|i| area * face_r[i].powi(d - 1) / (r[i + 1] - r[i])).collect();
        let boundary_coeff = match boundary {
            Boundary::Neumann => 0.0,
            Boundary::Robin { k } => k * area * grid.r_max().powi(d - 2),
        };
        Self { volumes, faces, boundary_coeff, boundary }
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// `A w` (net flux into each shell).
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, a) in self.faces.iter().enumerate() {
            let flux = a * (w[i + 1] - w[i]);
            out[i] += flux;
            out[i + 1] -= flux;
        }
        out[n - 1] -= self.boundary_coeff * w[n - 1];
        out
    }

    /// `V^{-1} A w`, the discrete Laplacian.
    pub fn laplacian(&self, w: &[f64]) -> Vec<f64> {
        self.apply(w).iter().zip(&self.volumes).map(|(a, v)| a / v).collect()
    }

    /// `-w^T A w`, the discrete Dirichlet energy.
    pub fn energy(&self, w: &[f64]) -> f64 {
        let n = self.len();
        let interior: f64 =
            self.faces.iter().enumerate().map(|(i, a)| a * (w[i + 1] - w[i]).powi(2)).sum();
        interior + self.boundary_coeff * w[n - 1] * w[n - 1]
    }

    /// `sum_i V_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.volumes.iter().zip(f).map(|(v, f)| v * f).sum()
    }

    /// The matrix `A` in tridiagonal form.
    pub fn matrix(&self) -> Tridiagonal {
        let n = self.len();
        let mut m = Tridiagonal::zeros(n);
        for (i, a) in self.faces.iter().enumerate() {
            m.diag[i] -= a;
            m.diag[i + 1] -= a;
            m.upper[i] = *a;
            m.lower[i] = *a;
        }
        m.diag[n - 1] -= self.boundary_coeff;
        m
    }

    /// Solves `-A u = V f`.
    ///
    /// With a Neumann boundary the source must have zero discrete mass; the
    /// solution is then fixed by `u(R_max) = 0`.
    pub fn solve_poisson(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut m = self.matrix();
        for x in m.diag.iter_mut().chain(m.lower.iter_mut()).chain(m.upper.iter_mut()) {
            *x = -*x;
        }
        let mut rhs: Vec<f64> = self.volumes.iter().zip(f).map(|(v, f)| v * f).collect();
        if self.boundary_coeff == 0.0 {
            let mass: f64 = rhs.iter().sum();
            let scale: f64 = rhs.iter().map(|x| x.abs()).sum();
            if mass.abs() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Domain(format!(
                    "Neumann Poisson problem needs a zero-mass source, got mass {mass:e}"
                )));
            }
            m.diag[n - 1] = 1.0;
            m.lower[n - 2] = 0.0;
            rhs[n - 1] = 0.0;
        }
        m.solve(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::grid::{make_grid, Spacing};
    use std::f64::consts::PI;

    #[test]
    fn volumes_tile_the_ball() {
        let g = make_grid(5, 7.0, 100, Spacing::LogStretched).unwrap();
        let op = FvOperator::new(&g, Boundary::Neumann);
        let total: f64 = op.volumes().iter().sum();
        let exact = 8.0 * PI * PI / 15.0 * 7.0f64.powi(5);
        assert!(((total - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn neumann_operator_conserves_mass() {
        let g = make_grid(2, 50.0, 80, Spacing::LogStretched).unwrap();
        let op = FvOperator::new(&g, Boundary::Neumann);
        let w: Vec<f64> = g.nodes().iter().map(|r| (-r).exp() * (1.0 + r).sin()).collect();
        let total: f64 = op.apply(&w).iter().sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn energy_matches_quadratic_form() {
        let g = make_grid(3, 10.0, 64, Spacing::LogStretched).unwrap();
        let op = FvOperator::new(&g, Boundary::Robin { k: 1.0 });
        let w: Vec<f64> = g.nodes().iter().map(|r| 1.0 / (1.0 + r * r)).collect();
        let aw = op.apply(&w);
        let q: f64 = -w.iter().zip(&aw).map(|(a, b)| a * b).sum::<f64>();
        assert!((q - op.energy(&w)).abs() < 1e-12 * q.abs());
    }

    #[test]
    fn poisson_inverts_the_operator() {
        let g = make_grid(5, 20.0, 128, Spacing::LogStretched).unwrap();
        let op = FvOperator::new(&g, Boundary::Robin { k: 3.0 });
        let f: Vec<f64> = g.nodes().iter().map(|r| (1.0 + r * r).powf(-3.5)).collect();
        let u = op.solve_poisson(&f).unwrap();
        let back = op.laplacian(&u);
        for (a, b) in back.iter().zip(&f) {
            assert!((a + b).abs() < 1e-9 * f[0]);
        }
    }
}
