use std::sync::Arc;

use rayon::prelude::*;

use crate::discrete::krylov::{self, KrylovOutcome};
use crate::discrete::{Field, GridSpec};
use crate::{Error, Result};

const NOT_UNKNOWN: usize = usize::MAX;
/// Rows per rayon task in the mat-vec.
const PAR_MIN_ROWS: usize = 4096;

/// CSR matrix of `-Δ_γ` on the interior nodes of a grid, with homogeneous
/// Dirichlet values eliminated.
///
/// The `y`-stencil at a node carries the nodal coefficient `|x|^{2γ}`, which
/// keeps the matrix symmetric with non-positive off-diagonals.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<GridSpec>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    interior: Vec<usize>,
    node_to_unknown: Vec<usize>,
}

/// Result of [`solve_linear`].
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub field: Field,
    pub iterations: usize,
    pub residual: f64,
}

impl DiscreteOperator {
    pub fn assemble(grid: &Arc<GridSpec>) -> Result<Self> {
        for (axis, &nodes) in grid.dims().iter().enumerate() {
            if nodes < 3 {
                return Err(Error::GridTooSmall { axis, nodes });
            }
        }
        let n_nodes = grid.node_count();
        let mut node_to_unknown = vec![NOT_UNKNOWN; n_nodes];
        let mut interior = Vec::new();
        for idx in 0..n_nodes {
            if !grid.is_boundary(idx) {
                node_to_unknown[idx] = interior.len();
                interior.push(idx);
            }
        }

        let params = grid.params();
        let nx = params.n();
        let ndim = grid.ndim();
        let strides = grid.strides();
        let inv_h2: Vec<f64> = grid.spacings().iter().map(|h| 1.0 / (h * h)).collect();
        let two_gamma = 2.0 * params.gamma();

        let mut row_ptr = Vec::with_capacity(interior.len() + 1);
        let mut cols = Vec::with_capacity(interior.len() * (2 * ndim + 1));
        let mut vals = Vec::with_capacity(cols.capacity());
        row_ptr.push(0);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * ndim + 1);
        for &node in &interior {
            let coef_y = grid.x_norm(node).powf(two_gamma);
            entries.clear();
            let mut diag = 0.0;
            for k in 0..ndim {
                let w = if k < nx { inv_h2[k] } else { coef_y * inv_h2[k] };
                if w == 0.0 {
                    continue;
                }
                diag += 2.0 * w;
                for nb in [node - strides[k], node + strides[k]] {
                    let u = node_to_unknown[nb];
                    if u != NOT_UNKNOWN {
                        entries.push((u, -w));
                    }
                }
            }
            entries.push((node_to_unknown[node], diag));
            entries.sort_by_key(|e| e.0);
            for &(c, v) in &entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }

        Ok(Self {
            grid: grid.clone(),
            row_ptr,
            cols,
            vals,
            interior,
            node_to_unknown,
        })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    /// Number of unknowns (interior nodes).
    pub fn size(&self) -> usize {
        self.interior.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Grid index of each unknown.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Unknown index of a grid node, `None` on the boundary.
    pub fn unknown_of(&self, node: usize) -> Option<usize> {
        match self.node_to_unknown[node] {
            NOT_UNKNOWN => None,
            u => Some(u),
        }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size())
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).find(|(&c, _)| c == i).map_or(0.0, |(_, &v)| v)
            })
            .collect()
    }

    /// `y = A x` on unknown vectors.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.size());
        assert_eq!(y.len(), self.size());
        y.par_iter_mut()
            .with_min_len(PAR_MIN_ROWS)
            .enumerate()
            .for_each(|(i, yi)| {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * x[self.cols[k]];
                }
                *yi = acc;
            });
    }

    /// Interior values of a field as an unknown vector.
    pub fn restrict(&self, field: &Field) -> Result<Vec<f64>> {
        self.check(field)?;
        Ok(self.interior.iter().map(|&n| field.values()[n]).collect())
    }

    /// Unknown vector to a field with zero boundary values.
    pub fn prolong(&self, x: &[f64]) -> Field {
        let mut f = Field::zeros(self.grid.clone());
        let v = f.values_mut();
        for (&n, &xi) in self.interior.iter().zip(x) {
            v[n] = xi;
        }
        f
    }

    /// `-Δ_γ u` with the boundary values of `u` treated as zero; the result is
    /// zero on boundary nodes.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        let x = self.restrict(u)?;
        let mut y = vec![0.0; x.len()];
        self.matvec(&x, &mut y);
        Ok(self.prolong(&y))
    }

    /// `-Δ_γ u` using the actual boundary values of `u` in the stencil (no
    /// elimination). Zero on boundary nodes.
    pub fn apply_with_boundary(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let grid = &self.grid;
        let nx = grid.params().n();
        let strides = grid.strides();
        let inv_h2: Vec<f64> = grid.spacings().iter().map(|h| 1.0 / (h * h)).collect();
        let two_gamma = 2.0 * grid.params().gamma();
        let vals = u.values();
        let mut out = Field::zeros(grid.clone());
        let o = out.values_mut();
        for &node in &self.interior {
            let coef_y = grid.x_norm(node).powf(two_gamma);
            let mut acc = 0.0;
            for k in 0..grid.ndim() {
                let w = if k < nx { inv_h2[k] } else { coef_y * inv_h2[k] };
                acc += w * (2.0 * vals[node] - vals[node - strides[k]] - vals[node + strides[k]]);
            }
            o[node] = acc;
        }
        Ok(out)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.same_grid(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Conjugate gradients on the assembled SPD operator.
pub fn solve_linear(
    op: &DiscreteOperator,
    rhs: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<LinearSolve> {
    let b = op.restrict(rhs)?;
    let x0 = vec![0.0; b.len()];
    let KrylovOutcome {
        x,
        iterations,
        residual,
    } = krylov::cg(|v, out| op.matvec(v, out), &b, x0, tol, max_iter)?;
    Ok(LinearSolve {
        field: op.prolong(&x),
        iterations,
        residual,
    })
}
