//! Configuration shared by the check and flow registries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::scheme::StepControl;
use crate::profiles::ProfileSpec;
use crate::radial::Spacing;

/// Default tolerance of every named check.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("ccl_flow", 1e-2),
    ("closed_forms", 1e-5),
    ("constant_identity", 1e-5),
    ("decay_bounds", 1e-3),
    ("exp_moment", 1e-6),
    ("explicit_gap", 1e-5),
    ("h2_derivative", 3e-2),
    ("h2_monotonicity", 1e-8),
    ("hd_derivative", 1e-2),
    ("hd_monotonicity", 1e-8),
    ("hls_deficit", 1e-5),
    ("kappa", 1e-3),
    ("lemma", 1e-8),
    ("loghls", 1e-6),
    ("onofri", 1e-6),
    ("optimizer_residual", 1e-4),
    ("probe", 1e-6),
    ("second_derivative", 3e-2),
    ("separated_extinction", 1e-2),
    ("sobolev_deficit", 1e-6),
    ("stationarity", 1e-10),
    ("theorem_gap", 3e-2),
];

/// Effective tolerances: the defaults with any overrides applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.0.contains_key(name) {
            return Err(Error::Parse(format!(
                "unknown tolerance '{name}' (known: {})",
                self.0.keys().cloned().collect::<Vec<_>>().join(", ")
            )));
        }
        if !(value >= 0.0) {
            return Err(Error::Parse(format!("tolerance {name} must be nonnegative, got {value}")));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }
}

impl TryFrom<BTreeMap<String, f64>> for Tolerances {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let mut t = Self::default();
        for (k, v) in map {
            t.set(&k, v)?;
        }
        Ok(t)
    }
}

impl From<Tolerances> for BTreeMap<String, f64> {
    fn from(t: Tolerances) -> Self {
        t.0
    }
}

/// Outer radius used when none is configured: the fast diffusion flow's
/// harmonic exterior makes `R = 100` enough; the other flows keep their
/// mass inside a wall and need `R = 1e4`.
pub fn default_r_max(flow: &str) -> f64 {
    match flow {
        "fd" => 100.0,
        _ => 1e4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub d: usize,
    /// Grid size of flow runs.
    pub n: usize,
    /// Outer radius of flow runs; `None` selects [`default_r_max`].
    pub r_max: Option<f64>,
    pub spacing: Spacing,
    pub dt0: f64,
    /// Target relative change of `v` per step; halving it halves the steps.
    pub eta: f64,
    pub eps_ext: f64,
    pub max_steps: usize,
    /// Seed of the randomly drawn test-family members.
    pub seed: u64,
    /// Grid size of the runs behind the integral identity.
    pub gap_n: usize,
    /// Random members added to the perturbation lattice.
    pub family_extra: usize,
    /// Additional initial datum for the flow checks.
    pub profile: Option<ProfileSpec>,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let control = StepControl::default();
        Self {
            d: 5,
            n: 512,
            r_max: None,
            spacing: Spacing::LogStretched,
            dt0: control.dt0,
            eta: control.eta,
            eps_ext: 1e-4,
            max_steps: control.max_steps,
            seed: 0,
            gap_n: 2048,
            family_extra: 8,
            profile: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl SuiteConfig {
    pub fn r_max_for(&self, flow: &str) -> f64 {
        self.r_max.unwrap_or_else(|| default_r_max(flow))
    }

    pub fn control(&self) -> StepControl {
        StepControl { dt0: self.dt0, eta: self.eta, max_steps: self.max_steps, ..StepControl::default() }
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances.get(name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {}", self.d)));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Domain(format!("r_max must be positive, got {r}")));
            }
        }
        if !(self.dt0 > 0.0) {
            return Err(Error::Domain(format!("dt0 must be positive, got {}", self.dt0)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Domain(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.eps_ext > 0.0 && self.eps_ext < 1.0) {
            return Err(Error::Domain(format!("eps_ext must lie in (0, 1), got {}", self.eps_ext)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_reject_unknown_names() {
        let mut t = Tolerances::default();
        assert!(t.set("theorem_gap", 0.05).is_ok());
        assert_eq!(t.get("theorem_gap"), 0.05);
        assert!(t.set("nonsense", 1.0).is_err());
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Tolerances>(&json).unwrap(), t);
    }
}
