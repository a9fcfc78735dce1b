//! Finite-difference discretisation of `-Δ_γ` on boxes.

mod field;
mod grid;
pub mod krylov;
mod operator;

pub use field::Field;
pub use grid::{grushin_half_widths, GridSpec, MAX_NODES_3D};
pub use operator::{solve_linear, DiscreteOperator, LinearSolve};

/// Trapezoid approximation of `‖u‖_γ = (∫ |∇_γ u|² + u²)^{1/2}` with
/// `∇_γ = (∂_x, |x|^γ ∂_y)`. Derivatives are central in the interior and
/// one-sided on the boundary.
pub fn discrete_h1_gamma_norm(u: &Field) -> f64 {
    let grid = u.grid();
    let params = grid.params();
    let nx = params.n();
    let ndim = grid.ndim();
    let strides = grid.strides();
    let h = grid.spacings();
    let dims = grid.dims();
    let v = u.values();
    let mut total = 0.0;
    for idx in 0..grid.node_count() {
        let m = grid.multi_index(idx);
        let mut weight = 1.0;
        let mut grad2_x = 0.0;
        let mut grad2_y = 0.0;
        for k in 0..ndim {
            let i = m[k];
            let last = dims[k] - 1;
            weight *= if i == 0 || i == last { 0.5 * h[k] } else { h[k] };
            let d = if i == 0 {
                (v[idx + strides[k]] - v[idx]) / h[k]
            } else if i == last {
                (v[idx] - v[idx - strides[k]]) / h[k]
            } else {
                (v[idx + strides[k]] - v[idx - strides[k]]) / (2.0 * h[k])
            };
            if k < nx {
                grad2_x += d * d;
            } else {
                grad2_y += d * d;
            }
        }
        let coef = grid.x_norm(idx).powf(2.0 * params.gamma());
        total += weight * (grad2_x + coef * grad2_y + v[idx] * v[idx]);
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::GrushinParams;

    #[test]
    fn norm_of_zero_and_constant() {
        let p = GrushinParams::new(1, 1, 1.0).unwrap();
        let g = Arc::new(GridSpec::new(p, vec![11, 11], vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        assert_eq!(discrete_h1_gamma_norm(&Field::zeros(g.clone())), 0.0);
        let one = Field::from_fn(g, |_| 1.0);
        assert!((discrete_h1_gamma_norm(&one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_norm_converges() {
        // ∫ e^{-2x²-2y²} (4x² + 4x²y² + 1) = 9π/8 for γ = 1
        let p = GrushinParams::new(1, 1, 1.0).unwrap();
        let exact = (9.0 * std::f64::consts::PI / 8.0).sqrt();
        let g = Arc::new(GridSpec::cube(p, 4.0, 128).unwrap());
        let u = Field::from_fn(g, |z| (-z.x[0].powi(2) - z.y[0].powi(2)).exp());
        let got = discrete_h1_gamma_norm(&u);
        assert!((got - exact).abs() / exact < 0.02, "{got} vs {exact}");
    }
}
