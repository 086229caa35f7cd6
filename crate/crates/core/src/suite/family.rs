//! Reproducible test data: perturbations `F + eps * bump(r, r0)` of the
//! Aubin-Talenti profile for the fast diffusion side, and bumps `a * bump(r, r0)`
//! for the two-dimensional side.
//!
//! A fixed lattice of `(eps, r0)` is always included; a seed adds randomly
//! drawn members on top of it.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::profiles::{aubin_talenti, bump};
use crate::radial::{RadialField, RadialGrid};

/// Amplitudes of the lattice. Negative amplitudes make `F + eps * bump`
/// change sign for large `r0`; such members are projected to `max(., 0)`.
pub const LATTICE_EPS: [f64; 5] = [-0.3, 0.1, 0.3, 1.0, 3.0];
/// Bump centers of the lattice.
pub const LATTICE_R0: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

/// The flow initial data: three positive perturbations.
pub const FLOW_DATA: [Perturbation; 3] =
    [Perturbation { eps: 0.1, r0: 1.0 }, Perturbation { eps: 0.3, r0: 0.5 }, Perturbation { eps: 0.2, r0: 2.0 }];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub eps: f64,
    pub r0: f64,
}

impl Perturbation {
    pub fn label(&self) -> String {
        format!("eps={},r0={}", self.eps, self.r0)
    }

    /// `max(F + eps * bump(r, r0), 0)` on `grid`.
    pub fn field(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        let d = grid.dim();
        RadialField::from_fn(grid.clone(), |r| (aubin_talenti(r, d) + self.eps * bump(r, self.r0)).max(0.0))
    }
}

/// The lattice followed by `extra` members drawn from `seed`
/// (`eps` uniform in `[-0.3, 3]`, `r0` uniform in `[0, 4]`).
pub fn perturbation_family(seed: u64, extra: usize) -> Vec<Perturbation> {
    let mut out: Vec<Perturbation> =
        LATTICE_EPS.iter().flat_map(|&eps| LATTICE_R0.iter().map(move |&r0| Perturbation { eps, r0 })).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        let eps = rng.gen_range(-0.3..3.0);
        let r0 = rng.gen_range(0.0..4.0);
        out.push(Perturbation { eps, r0 });
    }
    out
}

/// A radial function `a * bump(r, r0)` on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneBump {
    pub a: f64,
    pub r0: f64,
}

impl PlaneBump {
    pub fn label(&self) -> String {
        format!("a={},r0={}", self.a, self.r0)
    }

    pub fn field(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        RadialField::from_fn(grid.clone(), |r| self.a * bump(r, self.r0))
    }
}

/// `count` bumps drawn from `seed` with `a` uniform in `[-2, 2]` and `r0`
/// uniform in `[0, 2]`.
pub fn plane_bumps(seed: u64, count: usize) -> Vec<PlaneBump> {
    // Separate stream from the perturbation family.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..count).map(|_| PlaneBump { a: rng.gen_range(-2.0..2.0), r0: rng.gen_range(0.0..2.0) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_deterministic() {
        assert_eq!(perturbation_family(7, 4), perturbation_family(7, 4));
        assert_ne!(perturbation_family(7, 4), perturbation_family(8, 4));
        assert_eq!(perturbation_family(1, 0).len(), LATTICE_EPS.len() * LATTICE_R0.len());
        assert_eq!(plane_bumps(3, 5), plane_bumps(3, 5));
    }
}
