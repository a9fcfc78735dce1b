use serde::{Deserialize, Serialize};

use crate::geometry::{GrushinParams, Point};
use crate::{Error, Result};

/// Largest node count accepted for grids with three or more axes.
pub const MAX_NODES_3D: usize = 64 * 64 * 64;

/// Node-centred tensor grid over a box, boundary nodes included.
///
/// Axes are ordered `x_1..x_N, y_1..y_l`. Node indices are lexicographic with
/// axis 0 slowest (x-major), so the last `y` axis is contiguous in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    params: GrushinParams,
    dims: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl GridSpec {
    pub fn new(params: GrushinParams, dims: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = params.dim();
        if dims.len() != d || lo.len() != d || hi.len() != d {
            return Err(Error::InvalidParams(format!(
                "grid needs {d} axes (got dims={}, lo={}, hi={})",
                dims.len(),
                lo.len(),
                hi.len()
            )));
        }
        for (axis, &nodes) in dims.iter().enumerate() {
            if nodes < 3 {
                return Err(Error::GridTooSmall { axis, nodes });
            }
            if !(lo[axis].is_finite() && hi[axis].is_finite() && hi[axis] > lo[axis]) {
                return Err(Error::InvalidParams(format!(
                    "axis {axis} has empty extent [{}, {}]",
                    lo[axis], hi[axis]
                )));
            }
        }
        let total = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match total {
            Some(t) if d < 3 || t <= MAX_NODES_3D => {}
            _ => {
                return Err(Error::InvalidParams(format!(
                    "grid with {d} axes is limited to {MAX_NODES_3D} nodes"
                )))
            }
        }
        Ok(Self { params, dims, lo, hi })
    }

    /// Bounding box of the Grushin ball of radius `radius`:
    /// `|x_i| ≤ (1+γ)^{1/(1+γ)} R`, `|y_j| ≤ R^{1+γ}`, with `nodes` per axis.
    ///
    /// Boxes of different radii are exact dilates of each other, so a fixed
    /// node count gives node-to-node dilation covariance.
    pub fn grushin_box(params: GrushinParams, radius: f64, nodes: usize) -> Result<Self> {
        let (rx, ry) = grushin_half_widths(&params, radius)?;
        let d = params.dim();
        let mut lo = vec![-rx; d];
        let mut hi = vec![rx; d];
        for k in params.n()..d {
            lo[k] = -ry;
            hi[k] = ry;
        }
        Self::new(params, vec![nodes; d], lo, hi)
    }

    /// Like [`GridSpec::grushin_box`] but cut to `y_l ∈ [0, R^{1+γ}]`, so one
    /// face lies on the half-space boundary `{y_l = 0}`.
    pub fn halfspace_box(params: GrushinParams, radius: f64, nodes: usize) -> Result<Self> {
        let mut g = Self::grushin_box(params, radius, nodes)?;
        let last = params.dim() - 1;
        g.lo[last] = 0.0;
        Self::new(g.params, g.dims, g.lo, g.hi)
    }

    /// Euclidean box `[-a, a]^{N+l}`.
    pub fn cube(params: GrushinParams, half_width: f64, nodes: usize) -> Result<Self> {
        let d = params.dim();
        Self::new(params, vec![nodes; d], vec![-half_width; d], vec![half_width; d])
    }

    pub fn params(&self) -> &GrushinParams {
        &self.params
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.dims[axis] - 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.ndim()).map(|k| self.spacing(k)).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.ndim()];
        for k in (0..self.ndim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.ndim()];
        for k in (0..self.ndim()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        out
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Coordinate of node `i` along `axis`.
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.dims[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.axis_coord(k, i))
            .collect()
    }

    pub fn point(&self, idx: usize) -> Point {
        Point::from_coords(&self.params, &self.coords(idx))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.multi_index(idx)
            .iter()
            .zip(&self.dims)
            .any(|(&i, &n)| i == 0 || i + 1 == n)
    }

    /// Whether the box meets the degeneracy set `{x = 0}`.
    pub fn contains_degeneracy_set(&self) -> bool {
        (0..self.params.n()).all(|k| self.lo[k] <= 0.0 && self.hi[k] >= 0.0)
    }

    /// `|x|` at node `idx`.
    pub fn x_norm(&self, idx: usize) -> f64 {
        let m = self.multi_index(idx);
        (0..self.params.n())
            .map(|k| self.axis_coord(k, m[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Grid whose nodes are `δ_{1/λ}` of this grid's nodes, i.e. the domain of
    /// `z ↦ u(δ_λ z)`.
    pub fn dilated_domain(&self, lambda: f64) -> Result<Self> {
        let n = self.params.n();
        let sy = lambda.powf(-(1.0 + self.params.gamma()));
        let scale = |k: usize| if k < n { 1.0 / lambda } else { sy };
        let lo = (0..self.ndim()).map(|k| self.lo[k] * scale(k)).collect();
        let hi = (0..self.ndim()).map(|k| self.hi[k] * scale(k)).collect();
        Self::new(self.params, self.dims.clone(), lo, hi)
    }

    /// Same box with every axis refined `factor` times.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let dims = self.dims.iter().map(|&n| (n - 1) * factor + 1).collect();
        Self::new(self.params, dims, self.lo.clone(), self.hi.clone())
    }

    /// Multilinear interpolation weights of a point: `None` outside the box.
    pub(crate) fn stencil(&self, coords: &[f64]) -> Option<Vec<(usize, f64)>> {
        let d = self.ndim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let c = coords[k];
            let tol = 1e-12 * (self.hi[k] - self.lo[k]);
            if c < self.lo[k] - tol || c > self.hi[k] + tol {
                return None;
            }
            let t = ((c - self.lo[k]) / self.spacing(k)).clamp(0.0, (self.dims[k] - 1) as f64);
            let i = (t.floor() as usize).min(self.dims[k] - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let strides = self.strides();
        let origin: usize = base.iter().zip(&strides).map(|(b, s)| b * s).sum();
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = origin;
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    idx += strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                out.push((idx, w));
            }
        }
        Some(out)
    }
}

/// Half-widths `(x, y)` of the bounding box of the Grushin ball of radius `R`.
pub fn grushin_half_widths(params: &GrushinParams, radius: f64) -> Result<(f64, f64)> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParams(format!("box radius must be positive (got {radius})")));
    }
    let g = params.gamma();
    Ok(((1.0 + g).powf(1.0 / (1.0 + g)) * radius, radius.powf(1.0 + g)))
}
