//! Sobolev and HLS deficits from the quadrature primitives, and the static
//! constant identities between Sobolev and Gagliardo-Nirenberg constants.

use std::f64::consts::PI;

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::radial::{dirichlet_energy_with_tail, integrate_with_tail, lp_norm_with_tail, newton_potential, RadialField, TailModel};
use crate::report::{CheckReport, RunMeta};

/// `q = (d+2)/(d-2)`, the power mapping Sobolev functions to HLS densities.
pub fn hls_power(d: usize) -> f64 {
    (d as f64 + 2.0) / (d as f64 - 2.0)
}

fn require_sobolev_dim(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::Domain(format!("Sobolev and HLS deficits need d >= 3, got {d}")));
    }
    Ok(())
}

/// `||w||_{2d/(d-2)}^2`.
pub fn critical_norm_sq(w: &RadialField) -> Result<f64> {
    let d = w.dim() as f64;
    Ok(lp_norm_with_tail(w, 2.0 * d / (d - 2.0), TailModel::Fitted)?.powi(2))
}

/// `S ||grad w||^2 - ||w||_{2d/(d-2)}^2`.
pub fn sobolev_deficit(w: &RadialField, sobolev: f64) -> Result<f64> {
    require_sobolev_dim(w.dim())?;
    Ok(sobolev * dirichlet_energy_with_tail(w, TailModel::Fitted)? - critical_norm_sq(w)?)
}

/// The two terms of the HLS deficit: `||v||_{2d/(d+2)}^2` and
/// `int v (-Delta)^{-1} v`.
pub fn hls_terms(v: &RadialField) -> Result<(f64, f64)> {
    require_sobolev_dim(v.dim())?;
    if !v.is_nonnegative() {
        return Err(Error::Domain("the HLS deficit needs a nonnegative density".into()));
    }
    let d = v.dim() as f64;
    let norm = lp_norm_with_tail(v, 2.0 * d / (d + 2.0), TailModel::Fitted)?.powi(2);
    let u = newton_potential(v)?;
    let pot = integrate_with_tail(&v.mul(&u)?, TailModel::Fitted)?;
    Ok((norm, pot))
}

/// `S ||v||_{2d/(d+2)}^2 - int v (-Delta)^{-1} v`.
pub fn hls_deficit(v: &RadialField, sobolev: f64) -> Result<f64> {
    let (norm, pot) = hls_terms(v)?;
    Ok(sobolev * norm - pot)
}

/// `d(d-2)/(d-1)^2 S_d = C_{q,d}^{2q}` with `q = (d+1)/(d-1)` for `d >= 3`,
/// and `pi C_{3,2}^6 = 1` for `d = 2`.
pub fn ccl_identity_check(d: usize, table: &ConstantsTable, tol: f64) -> Result<CheckReport> {
    let name = format!("constant_identity[d={d}]");
    let grid = table.grid();
    let meta = RunMeta { n: grid.n, r_max: grid.r_max, dt: 0.0 };
    if d == 2 {
        let c = table.gn(3.0, 2)?;
        let lhs = PI * c.powi(6);
        return Ok(CheckReport::graded(
            &name,
            "pi times the sixth power of the d = 2, p = 3 Gagliardo-Nirenberg constant equals one",
            (lhs - 1.0).abs(),
            tol,
        )
        .with("pi_c6", lhs)
        .with("gn_constant", c)
        .with_meta(meta));
    }
    require_sobolev_dim(d)?;
    let df = d as f64;
    let q = (df + 1.0) / (df - 1.0);
    let s = table.sobolev(d)?;
    let lhs = df * (df - 2.0) / (df - 1.0).powi(2) * s;
    let c = table.gn(q, d)?;
    let rhs = c.powf(2.0 * q);
    Ok(CheckReport::graded(
        &name,
        "Sobolev constant times d(d-2)/(d-1)^2 equals the Gagliardo-Nirenberg constant to the power 2q",
        (lhs - rhs).abs() / s,
        tol,
    )
    .with("lhs", lhs)
    .with("rhs", rhs)
    .with("q", q)
    .with("sobolev", s)
    .with_meta(meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{aubin_talenti, bump};
    use crate::radial::{make_grid, Spacing};

    #[test]
    fn deficits_are_quadratic() {
        let g = make_grid(5, 1e4, 1024, Spacing::LogStretched).unwrap();
        let w = RadialField::from_fn(g, |r| aubin_talenti(r, 5) + 0.2 * bump(r, 1.0)).unwrap();
        let s = 0.02;
        let a = sobolev_deficit(&w, s).unwrap();
        let b = sobolev_deficit(&w.scale(2.0).unwrap(), s).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-12 * b.abs().max(1e-12));
        let v = w.map(|x| x.powf(hls_power(5))).unwrap();
        let a = hls_deficit(&v, s).unwrap();
        let b = hls_deficit(&v.scale(2.0).unwrap(), s).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn low_dimensions_are_refused() {
        let g = make_grid(2, 10.0, 64, Spacing::LogStretched).unwrap();
        let w = RadialField::constant(g, 1.0).unwrap();
        assert!(sobolev_deficit(&w, 1.0).is_err());
    }
}
