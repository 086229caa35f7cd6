//! Closed-form radial profiles: the Aubin-Talenti function, the
//! Gagliardo-Nirenberg optimizers, the probability measure `mu` on `R^2` and
//! the separated solution of the fast diffusion flow.
//!
//! Profiles are named on the command line as `kind:key=value,...`, e.g.
//! `separated:d=5,T=1,lambda=1,t=0` or `gn_optimizer:p=3`.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::radial::{io, RadialField, RadialGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `F(x) = (1 + |x|^2)^{-(d-2)/2}`.
    AubinTalenti,
    /// `F_p(x) = (1 + |x|^2)^{-1/(p-1)}`.
    GnOptimizer { p: f64 },
    /// `mu(x) = 1 / (pi (1 + |x|^2)^2)` on `R^2`.
    MoonMeasure,
    /// `c (T - t)^alpha F^{(d+2)/(d-2)}`.
    Separated { t_final: f64, t: f64 },
    /// A field read from a two-column file.
    CustomTabulated { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    /// Dimension the profile is meant for; `None` means "the grid's".
    pub dim: Option<usize>,
    /// Coordinate scaling, see [`profile`].
    pub lambda: f64,
}

impl ProfileSpec {
    pub fn new(kind: ProfileKind) -> Self {
        Self { kind, dim: None, lambda: 1.0 }
    }

    pub fn aubin_talenti() -> Self {
        Self::new(ProfileKind::AubinTalenti)
    }

    pub fn gn_optimizer(p: f64) -> Self {
        Self::new(ProfileKind::GnOptimizer { p })
    }

    pub fn moon_measure() -> Self {
        Self::new(ProfileKind::MoonMeasure)
    }

    pub fn separated(t_final: f64, t: f64) -> Self {
        Self::new(ProfileKind::Separated { t_final, t })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_dim(mut self, d: usize) -> Self {
        self.dim = Some(d);
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProfileKind::AubinTalenti => "aubin_talenti",
            ProfileKind::GnOptimizer { .. } => "gn_optimizer",
            ProfileKind::MoonMeasure => "moon_measure",
            ProfileKind::Separated { .. } => "separated",
            ProfileKind::CustomTabulated { .. } => "custom_tabulated",
        }
    }

    /// Checks the parameter constraints for dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if let Some(sd) = self.dim {
            if sd != d {
                return Err(Error::Domain(format!(
                    "profile is declared for d = {sd} but the grid has d = {d}"
                )));
            }
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        match &self.kind {
            ProfileKind::AubinTalenti if d < 3 => {
                Err(Error::Domain("the Aubin-Talenti profile needs d >= 3".into()))
            }
            ProfileKind::GnOptimizer { p } => check_gn_window(*p, d),
            ProfileKind::MoonMeasure if d != 2 => {
                Err(Error::Domain(format!("the measure mu lives on R^2, not R^{d}")))
            }
            ProfileKind::Separated { t_final, t } => {
                if d < 3 {
                    Err(Error::Domain("the separated solution needs d >= 3".into()))
                } else if !(*t >= 0.0 && t < t_final) {
                    Err(Error::Domain(format!("separated solution needs 0 <= t < T, got t = {t}, T = {t_final}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Checks `1 < p` and, for `d >= 3`, `p <= d/(d-2)`.
pub fn check_gn_window(p: f64, d: usize) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("Gagliardo-Nirenberg exponent must satisfy p > 1, got {p}")));
    }
    if d >= 3 {
        let pmax = d as f64 / (d as f64 - 2.0);
        if p > pmax + 1e-12 {
            return Err(Error::Domain(format!("p = {p} exceeds d/(d-2) = {pmax} in dimension {d}")));
        }
    }
    if d < 2 {
        return Err(Error::Domain(format!("dimension must be >= 2, got {d}")));
    }
    Ok(())
}

/// `theta(p, d) = (p - 1)/p * d / (d + 2 - p (d - 2))`.
pub fn theta(p: f64, d: usize) -> Result<f64> {
    check_gn_window(p, d)?;
    let d = d as f64;
    Ok((p - 1.0) / p * d / (d + 2.0 - p * (d - 2.0)))
}

/// Exponent `m = (d-2)/(d+2)` of the flow whose separated solution is built
/// on the Aubin-Talenti profile.
pub fn sobolev_flow_exponent(d: usize) -> f64 {
    (d as f64 - 2.0) / (d as f64 + 2.0)
}

/// `(alpha, c)` of the separated solution `c (T-t)^alpha F^q`.
pub fn separated_coefficients(d: usize) -> (f64, f64) {
    let m = sobolev_flow_exponent(d);
    let alpha = (d as f64 + 2.0) / 4.0;
    let c = (4.0 * m * d as f64).powf(1.0 / (1.0 - m));
    (alpha, c)
}

pub fn aubin_talenti(r: f64, d: usize) -> f64 {
    (1.0 + r * r).powf(-(d as f64 - 2.0) / 2.0)
}

pub fn gn_optimizer(r: f64, p: f64) -> f64 {
    (1.0 + r * r).powf(-1.0 / (p - 1.0))
}

pub fn moon_measure(r: f64) -> f64 {
    1.0 / (PI * (1.0 + r * r).powi(2))
}

/// `c (T-t)^alpha F(r)^{(d+2)/(d-2)}`.
pub fn separated(r: f64, d: usize, t_final: f64, t: f64) -> f64 {
    let (alpha, c) = separated_coefficients(d);
    let q = (d as f64 + 2.0) / (d as f64 - 2.0);
    c * (t_final - t).powf(alpha) * aubin_talenti(r, d).powf(q)
}

/// Samples a profile on `grid`.
///
/// The scaling parameter acts as `f(x/lambda)` for `F` and `F_p`, as the
/// mass-preserving `lambda^{-2} mu(x/lambda)` for `mu`, and as
/// `lambda^{-(d+2)/2} v(t, x/lambda)` for the separated solution (the
/// exponent that maps solutions of `v_t = Delta v^m` to solutions).
pub fn profile(spec: &ProfileSpec, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    let d = grid.dim();
    spec.validate(d)?;
    let l = spec.lambda;
    match &spec.kind {
        ProfileKind::AubinTalenti => RadialField::from_fn(grid.clone(), |r| aubin_talenti(r / l, d)),
        ProfileKind::GnOptimizer { p } => RadialField::from_fn(grid.clone(), |r| gn_optimizer(r / l, *p)),
        ProfileKind::MoonMeasure => RadialField::from_fn(grid.clone(), |r| moon_measure(r / l) / (l * l)),
        ProfileKind::Separated { t_final, t } => {
            let amp = l.powf(-(d as f64 + 2.0) / 2.0);
            RadialField::from_fn(grid.clone(), |r| amp * separated(r / l, d, *t_final, *t))
        }
        ProfileKind::CustomTabulated { path } => {
            let f = io::read_field(path)?;
            if f.dim() != d {
                return Err(Error::Domain(format!(
                    "{} holds a d = {} field, grid has d = {d}",
                    path.display(),
                    f.dim()
                )));
            }
            if **f.grid() == **grid && l == 1.0 {
                return RadialField::new(grid.clone(), f.into_values());
            }
            if **f.grid() != **grid {
                warn!("{}: grid differs from the run grid, interpolating linearly", path.display());
            }
            RadialField::from_fn(grid.clone(), |r| f.interpolate(r / l))
        }
    }
}

/// Smooth even bump with peak value 1 at `r = r0` (for `r0 > 0`):
/// `(e^{-(r-r0)^2} + e^{-(r+r0)^2}) / (1 + e^{-4 r0^2})`.
pub fn bump(r: f64, r0: f64) -> f64 {
    ((-(r - r0).powi(2)).exp() + (-(r + r0).powi(2)).exp()) / (1.0 + (-4.0 * r0 * r0).exp())
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params: Vec<String> = Vec::new();
        if let Some(d) = self.dim {
            params.push(format!("d={d}"));
        }
        match &self.kind {
            ProfileKind::GnOptimizer { p } => params.push(format!("p={p}")),
            ProfileKind::Separated { t_final, t } => {
                params.push(format!("T={t_final}"));
                params.push(format!("t={t}"));
            }
            ProfileKind::CustomTabulated { path } => params.push(format!("path={}", path.display())),
            _ => {}
        }
        if self.lambda != 1.0 {
            params.push(format!("lambda={}", self.lambda));
        }
        if params.is_empty() {
            f.write_str(self.name())
        } else {
            write!(f, "{}:{}", self.name(), params.join(","))
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut dim = None;
        let mut lambda = 1.0;
        let mut p = None;
        let mut t_final = None;
        let mut t = 0.0;
        let mut path = None;
        let num = |key: &str, v: &str| -> Result<f64> {
            v.trim().parse().map_err(|_| Error::Parse(format!("profile parameter {key}: '{v}' is not a number")))
        };
        for item in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("profile parameter '{item}' is not key=value")))?;
            match k.trim() {
                "d" => {
                    dim = Some(v.trim().parse().map_err(|_| Error::Parse(format!("bad dimension '{v}'")))?)
                }
                "lambda" => lambda = num(k, v)?,
                "p" => p = Some(num(k, v)?),
                "T" => t_final = Some(num(k, v)?),
                "t" => t = num(k, v)?,
                "path" => path = Some(PathBuf::from(v.trim())),
                other => return Err(Error::Parse(format!("unknown profile parameter '{other}'"))),
            }
        }
        let kind = match kind.replace('-', "_").as_str() {
            "aubin_talenti" => ProfileKind::AubinTalenti,
            "gn_optimizer" => ProfileKind::GnOptimizer {
                p: p.ok_or_else(|| Error::Parse("gn_optimizer needs p=<value>".into()))?,
            },
            "moon_measure" => ProfileKind::MoonMeasure,
            "separated" => ProfileKind::Separated { t_final: t_final.unwrap_or(1.0), t },
            "custom_tabulated" => ProfileKind::CustomTabulated {
                path: path.ok_or_else(|| Error::Parse("custom_tabulated needs path=<file>".into()))?,
            },
            other => return Err(Error::Parse(format!("unknown profile kind '{other}'"))),
        };
        Ok(Self { kind, dim, lambda })
    }
}

impl Serialize for ProfileSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProfileSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{make_grid, Spacing};

    #[test]
    fn parses_and_prints() {
        let s: ProfileSpec = "separated:d=5,T=1,lambda=1,t=0".parse().unwrap();
        assert_eq!(s.kind, ProfileKind::Separated { t_final: 1.0, t: 0.0 });
        assert_eq!(s.dim, Some(5));
        assert_eq!(s.to_string().parse::<ProfileSpec>().unwrap(), s);
        let g: ProfileSpec = "gn_optimizer:p=3".parse().unwrap();
        assert_eq!(g.kind, ProfileKind::GnOptimizer { p: 3.0 });
        assert!("gn_optimizer".parse::<ProfileSpec>().is_err());
        assert!("blob".parse::<ProfileSpec>().is_err());
        assert!("separated:q=1".parse::<ProfileSpec>().is_err());
    }

    #[test]
    fn point_values() {
        assert!((moon_measure(0.0) - 1.0 / PI).abs() < 1e-16);
        assert!((gn_optimizer(1.0, 2.0) - 0.5).abs() < 1e-16);
        assert_eq!(aubin_talenti(0.0, 5), 1.0);
    }

    #[test]
    fn theta_values() {
        assert!((theta(3.0, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((theta(3.0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(theta(1.0 + 1e-12, 2).unwrap() < 1e-11);
        assert!(theta(4.0, 3).is_err());
        assert!(theta(0.5, 2).is_err());
    }

    #[test]
    fn validates_specs() {
        let g2 = make_grid(2, 10.0, 32, Spacing::LogStretched).unwrap();
        let g5 = make_grid(5, 10.0, 32, Spacing::LogStretched).unwrap();
        assert!(profile(&ProfileSpec::moon_measure(), &g5).is_err());
        assert!(profile(&ProfileSpec::aubin_talenti(), &g2).is_err());
        assert!(profile(&ProfileSpec::separated(1.0, 1.0), &g5).is_err());
        assert!(profile(&ProfileSpec::gn_optimizer(3.0), &g5).is_err());
        assert!(profile(&ProfileSpec::aubin_talenti().with_dim(3), &g5).is_err());
    }

    #[test]
    fn separated_vanishes_at_final_time() {
        let g = make_grid(5, 10.0, 64, Spacing::LogStretched).unwrap();
        let late = profile(&ProfileSpec::separated(1.0, 1.0 - 1e-8), &g).unwrap();
        assert!(late.max_abs() < 1e-9);
    }
}
