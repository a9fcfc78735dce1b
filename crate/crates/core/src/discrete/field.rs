use std::io::Write;
use std::sync::Arc;

use crate::discrete::GridSpec;
use crate::geometry::Point;
use crate::io::fmt_f64;
use crate::{Error, Result};

/// Nodal values on a [`GridSpec`], in the grid's lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<GridSpec>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Arc<GridSpec>) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<GridSpec>, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    /// Samples `f` in the interior and sets boundary nodes to zero.
    pub fn from_fn_dirichlet(grid: Arc<GridSpec>, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| if grid.is_boundary(i) { 0.0 } else { f(&grid.point(i)) })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
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

    pub fn same_grid(&self, other: &GridSpec) -> bool {
        std::ptr::eq(self.grid.as_ref(), other) || *self.grid == *other
    }

    /// Maximum value and the first node (lexicographic) attaining it.
    pub fn sup(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs_diff(&self, other: &Field) -> Result<f64> {
        if !other.same_grid(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Multilinear interpolation at flat coordinates; `None` outside the box.
    pub fn interpolate(&self, coords: &[f64]) -> Option<f64> {
        self.grid
            .stencil(coords)
            .map(|s| s.iter().map(|&(i, w)| w * self.values[i]).sum())
    }

    /// Like [`Field::interpolate`] but extends by zero outside the box.
    pub fn interpolate_or_zero(&self, coords: &[f64]) -> f64 {
        self.interpolate(coords).unwrap_or(0.0)
    }

    /// One row per node: coordinates then value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = self.grid.params();
        let mut header: Vec<String> = (1..=p.n()).map(|i| format!("x{i}")).collect();
        header.extend((1..=p.l()).map(|j| format!("y{j}")));
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for (idx, &v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.coords(idx).into_iter().map(fmt_f64).collect();
            row.push(fmt_f64(v));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
