use std::sync::Arc;

use crate::error::{Error, Result};
use crate::radial::grid::RadialGrid;

/// A radial function sampled at the nodes of a [`RadialGrid`].
///
/// Values are finite by construction: every constructor and transform
/// rejects NaN and infinities with [`Error::NonFinite`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

fn check_finite(grid: &RadialGrid, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, r: grid.nodes()[index], value: values[index] }),
        None => Ok(()),
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the origin.
    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise map that also sees the radius.
    pub fn map_with_r(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn zip_map(&self, other: &RadialField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &RadialField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RadialField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RadialField) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn ensure_same_grid(&self, other: &RadialField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    /// Piecewise-linear interpolation at an arbitrary radius; zero beyond
    /// `R_max` is not assumed, the last value is held instead.
    pub fn interpolate(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r <= 0.0 {
            return self.values[0];
        }
        if r >= self.grid.r_max() {
            return self.values[self.values.len() - 1];
        }
        let i = nodes.partition_point(|&x| x <= r) - 1;
        let t = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::grid::{make_grid, Spacing};

    #[test]
    fn rejects_non_finite_values() {
        let g = make_grid(3, 1.0, 16, Spacing::Uniform).unwrap();
        let mut v = vec![1.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(RadialField::new(g.clone(), v), Err(Error::NonFinite { index: 3, .. })));
        assert!(RadialField::new(g, vec![0.0; 15]).is_err());
    }

    #[test]
    fn interpolation_hits_nodes() {
        let g = make_grid(2, 5.0, 32, Spacing::LogStretched).unwrap();
        let f = RadialField::from_fn(g.clone(), |r| r * r).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            assert_eq!(f.interpolate(r), f.values()[i]);
        }
    }
}
