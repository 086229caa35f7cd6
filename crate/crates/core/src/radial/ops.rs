//! Integration, norms, gradient energy, the radial Laplacian and the Newton
//! potential for radial functions.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::field::RadialField;

/// Fraction of total mass carried by the outermost shell above which
/// [`newton_potential`] warns about truncation.
pub const TAIL_MASS_WARNING: f64 = 1e-6;

/// Model for the contribution of `r > R_max` to an integral.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum TailModel {
    /// Truncate at `R_max`.
    #[default]
    None,
    /// The integrand decays like `r^{-k}` beyond `R_max`.
    PowerLaw { exponent: f64 },
    /// Estimate the decay exponent from the last two nodes.
    Fitted,
}

/// `sum_i w_i f(r_i)`.
pub fn integrate(f: &RadialField) -> f64 {
    f.grid().weights().iter().zip(f.values()).map(|(w, v)| w * v).sum()
}

/// Decay exponent `k` such that `f ~ r^{-k}` near `R_max`, from the last two
/// nodes. Returns `None` if either value is non-positive.
pub fn fitted_decay_exponent(f: &RadialField) -> Option<f64> {
    let n = f.len();
    let (r1, r2) = (f.grid().nodes()[n - 2], f.grid().nodes()[n - 1]);
    let (f1, f2) = (f.values()[n - 2], f.values()[n - 1]);
    if f1 <= 0.0 || f2 <= 0.0 {
        return None;
    }
    Some(-(f2 / f1).ln() / (r2 / r1).ln())
}

fn tail_exponent(f: &RadialField, tail: TailModel) -> Result<Option<f64>> {
    match tail {
        TailModel::None => Ok(None),
        TailModel::PowerLaw { exponent } => Ok(Some(exponent)),
        TailModel::Fitted => Ok(fitted_decay_exponent(f)),
    }
}

/// [`integrate`] plus the analytic contribution of a power-law tail,
/// `|S^{d-1}| f(R) R^d / (k - d)`.
pub fn integrate_with_tail(f: &RadialField, tail: TailModel) -> Result<f64> {
    let body = integrate(f);
    let Some(k) = tail_exponent(f, tail)? else { return Ok(body) };
    let g = f.grid();
    let d = g.dim() as f64;
    let last = f.values()[f.len() - 1];
    if last == 0.0 {
        return Ok(body);
    }
    if k <= d {
        return Err(Error::UnderResolved(format!(
            "integrand decays like r^-{k:.4}, not integrable in dimension {d}"
        )));
    }
    let r = g.r_max();
    Ok(body + g.sphere_area() * last * r.powf(d) / (k - d))
}

/// `(int |f|^p)^{1/p}`.
pub fn lp_norm(f: &RadialField, p: f64) -> Result<f64> {
    lp_norm_with_tail(f, p, TailModel::None)
}

pub fn lp_norm_with_tail(f: &RadialField, p: f64, tail: TailModel) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("L^p exponent must be positive, got {p}")));
    }
    let fp = f.map(|v| v.abs().powf(p))?;
    let tail = match tail {
        TailModel::PowerLaw { exponent } => TailModel::PowerLaw { exponent: exponent * p },
        other => other,
    };
    Ok(integrate_with_tail(&fp, tail)?.powf(1.0 / p))
}

/// Radial derivative `f'(r)` by fourth-order differences in the grid
/// coordinate.
pub fn radial_derivative(f: &RadialField) -> Vec<f64> {
    f.grid().derivative_in_r(f.values())
}

/// `int |grad f|^2 = |S^{d-1}| int f'(r)^2 r^{d-1} dr`.
pub fn dirichlet_energy(f: &RadialField) -> f64 {
    let w = f.grid().weights();
    radial_derivative(f).iter().zip(w).map(|(d, w)| w * d * d).sum()
}

/// Bilinear form `int grad f . grad g`.
pub fn dirichlet_form(f: &RadialField, g: &RadialField) -> Result<f64> {
    f.ensure_same_grid(g)?;
    let w = f.grid().weights();
    let (df, dg) = (radial_derivative(f), radial_derivative(g));
    Ok(df.iter().zip(&dg).zip(w).map(|((a, b), w)| w * a * b).sum())
}

/// [`dirichlet_energy`] plus the tail of `f ~ f(R) (r/R)^{-a}`:
/// `|S^{d-1}| a^2 f(R)^2 R^{d-2} / (2a + 2 - d)`.
pub fn dirichlet_energy_with_tail(f: &RadialField, tail: TailModel) -> Result<f64> {
    let body = dirichlet_energy(f);
    let Some(a) = tail_exponent(f, tail)? else { return Ok(body) };
    let g = f.grid();
    let d = g.dim() as f64;
    let last = f.values()[f.len() - 1];
    if last == 0.0 || a == 0.0 {
        return Ok(body);
    }
    if 2.0 * a + 2.0 - d <= 0.0 {
        return Err(Error::UnderResolved(format!(
            "gradient of r^-{a:.4} is not square integrable in dimension {d}"
        )));
    }
    let r = g.r_max();
    Ok(body + g.sphere_area() * a * a * last * last * r.powf(d - 2.0) / (2.0 * a + 2.0 - d))
}

/// Second-order discrete Laplacian `f'' + (d-1) f'/r`.
///
/// Interior nodes use centered differences in the grid coordinate; the
/// origin uses the even extension, `d f''(0) ~ 2 d (f_1 - f_0) / r_1^2`; the
/// last node uses one-sided differences.
pub fn radial_laplacian(f: &RadialField) -> Result<RadialField> {
    let g = f.grid();
    let n = g.len();
    if n < 32 {
        return Err(Error::InvalidGrid(format!("radial Laplacian needs n >= 32, got {n}")));
    }
    let d = g.dim() as f64;
    let h = g.step();
    let r = g.nodes();
    let jac = g.jacobian();
    let v = f.values();
    // d(dr/ds)/ds, in closed form for each spacing.
    let jac_s = |i: usize| match g.spacing() {
        crate::radial::Spacing::Uniform => 0.0,
        crate::radial::Spacing::LogStretched => jac[i],
    };
    let mut out = vec![0.0; n];
    out[0] = 2.0 * d * (v[1] - v[0]) / (r[1] * r[1]);
    let combine = |i: usize, fs: f64, fss: f64| {
        let j = jac[i];
        let fr = fs / j;
        let frr = (fss - fs * jac_s(i) / j) / (j * j);
        frr + (d - 1.0) * fr / r[i]
    };
    for i in 1..n - 1 {
        let fs = (v[i + 1] - v[i - 1]) / (2.0 * h);
        let fss = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        out[i] = combine(i, fs, fss);
    }
    let m = n - 1;
    let fs = (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h);
    let fss = (2.0 * v[m] - 5.0 * v[m - 1] + 4.0 * v[m - 2] - v[m - 3]) / (h * h);
    out[m] = combine(m, fs, fss);
    RadialField::new(g.clone(), out)
}

/// Mass `M(r_i) = int_{|x| < r_i} f` at every node (fourth order).
pub fn cumulative_mass(f: &RadialField) -> Vec<f64> {
    let g = f.grid();
    let integrand: Vec<f64> = (0..g.len()).map(|i| g.measure_density(i) * f.values()[i]).collect();
    g.cumulative_in_s(&integrand)
}

/// `(-Delta)^{-1} f` by shell decomposition of the radial Green function,
/// restricted to sources inside `R_max`.
///
/// For `d >= 3`:
/// `u(r) = [r^{2-d} M(r) / |S^{d-1}| + int_r^R f(s) s ds] / (d - 2)`.
///
/// For `d = 2` the kernel is `-log|x| / (2 pi)`, which gives
/// `u(r) = -M(r) log(r) / (2 pi) - int_r^R f(s) s log(s) ds`. This is the
/// convolution gauge; it yields `u(0) = 0` for the measure `mu`.
pub fn newton_potential(f: &RadialField) -> Result<RadialField> {
    let g = f.grid();
    let n = g.len();
    let d = g.dim();
    let r = g.nodes();
    let mass = cumulative_mass(f);
    // Against the absolute mass, so that mass-free differences do not warn.
    let total: f64 = g.weights().iter().zip(f.values()).map(|(w, x)| w * x.abs()).sum();
    let shell = g.weights()[n - 1] * f.values()[n - 1];
    if total > 0.0 && (shell / total).abs() > TAIL_MASS_WARNING {
        warn!(
            "outermost shell carries {:.2e} of the mass; Newton potential truncation may be visible",
            (shell / total).abs()
        );
    }
    // Outer integral G(r) = int_r^R f(s) k(s) ds, with k(s) = s or s log s,
    // accumulated in the grid coordinate.
    let kernel = |s: f64| if d == 2 { if s > 0.0 { s * s.ln() } else { 0.0 } } else { s };
    let outer_integrand: Vec<f64> =
        (0..n).map(|i| f.values()[i] * kernel(r[i]) * g.jacobian()[i]).collect();
    let cum = g.cumulative_in_s(&outer_integrand);
    let outer: Vec<f64> = cum.iter().map(|c| cum[n - 1] - c).collect();
    let values = if d == 2 {
        (0..n)
            .map(|i| {
                let inner = if i == 0 { 0.0 } else { -mass[i] * r[i].ln() / (2.0 * PI) };
                inner - outer[i]
            })
            .collect()
    } else {
        let area = g.sphere_area();
        let dm2 = d as f64 - 2.0;
        (0..n)
            .map(|i| {
                let inner = if i == 0 {
                    0.0
                } else {
                    mass[i] * r[i].powf(2.0 - d as f64) / area
                };
                (inner + outer[i]) / dm2
            })
            .collect()
    };
    RadialField::new(g.clone(), values)
}

/// `max_i (1 + r_i^2)^{d+2} |f_i|`.
pub fn sup_weighted_norm(f: &RadialField) -> f64 {
    sup_weighted_norm_with_exponent(f, f.dim() as f64 + 2.0)
}

/// `max_i (1 + r_i^2)^e |f_i|` for an arbitrary weight exponent `e`.
pub fn sup_weighted_norm_with_exponent(f: &RadialField, e: f64) -> f64 {
    f.grid()
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(r, v)| (1.0 + r * r).powf(e) * v.abs())
        .fold(0.0, f64::max)
}

/// Weighted `L^2(R^d)` norm `sqrt(sum w_i f_i^2)`, used for relative
/// residuals.
pub fn l2_norm(f: &RadialField) -> f64 {
    f.grid().weights().iter().zip(f.values()).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::grid::{make_grid, Spacing};

    #[test]
    fn zero_field_integrates_to_zero() {
        let g = make_grid(3, 10.0, 64, Spacing::LogStretched).unwrap();
        let z = RadialField::zeros(g);
        assert_eq!(integrate(&z), 0.0);
        assert_eq!(lp_norm(&z, 2.0).unwrap(), 0.0);
        assert_eq!(dirichlet_energy(&z), 0.0);
        assert_eq!(sup_weighted_norm(&z), 0.0);
        assert!(newton_potential(&z).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_has_no_energy_or_laplacian() {
        let g = make_grid(4, 3.0, 64, Spacing::LogStretched).unwrap();
        let c = RadialField::constant(g, 2.5).unwrap();
        assert!(dirichlet_energy(&c).abs() < 1e-20);
        assert!(radial_laplacian(&c).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_exponent() {
        let g = make_grid(3, 1.0, 32, Spacing::Uniform).unwrap();
        let c = RadialField::constant(g, 1.0).unwrap();
        assert!(lp_norm(&c, 0.0).is_err());
    }

    #[test]
    fn power_law_tail_completes_the_integral() {
        // (1 + r^2)^{-3} in d = 3 integrates to pi^2 / 4.
        let g = make_grid(3, 1e3, 2048, Spacing::LogStretched).unwrap();
        let f = RadialField::from_fn(g, |r| (1.0 + r * r).powi(-3)).unwrap();
        let exact = PI * PI / 4.0;
        let with_tail = integrate_with_tail(&f, TailModel::Fitted).unwrap();
        assert!(((with_tail - exact) / exact).abs() < 1e-9, "{with_tail}");
    }

    #[test]
    fn divergent_tail_is_reported() {
        let g = make_grid(2, 1e3, 256, Spacing::LogStretched).unwrap();
        let f = RadialField::from_fn(g, |r| 1.0 / (1.0 + r)).unwrap();
        assert!(integrate_with_tail(&f, TailModel::Fitted).is_err());
    }
}
