//! Closed-form geometry of `R^{N+l}` under the Grushin structure.
//!
//! Points are split as `z = (x, y)` with `x ∈ R^N`, `y ∈ R^l`. The
//! quasi-distance to the origin is
//!
//! ```text
//! d(z, 0) = ( |x|^{2+2γ} / (1+γ)^2 + |y|^2 )^{1/(2+2γ)}
//! ```
//!
//! and is homogeneous of degree one under `δ_λ(x, y) = (λx, λ^{1+γ}y)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this distance the Kelvin inversion is not evaluated.
pub const ORIGIN_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrushinParams {
    n: usize,
    l: usize,
    gamma: f64,
}

/// Exponents attached to the homogeneous dimension `N_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    /// `2N_γ / (N_γ - 2)`
    pub sobolev: f64,
    /// `(N_γ + 2) / (N_γ - 2)`
    pub serrin_upper: f64,
    /// `1 + 4 / N_γ`
    pub halfspace_lower: f64,
}

impl GrushinParams {
    pub fn new(n: usize, l: usize, gamma: f64) -> Result<Self> {
        if n == 0 || l == 0 {
            return Err(Error::InvalidParams(format!(
                "N and l must be at least 1 (got N={n}, l={l})"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be a positive real (got {gamma})"
            )));
        }
        Ok(Self { n, l, gamma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Total number of coordinates `N + l`.
    pub fn dim(&self) -> usize {
        self.n + self.l
    }

    /// `N_γ = N + (1+γ) l`.
    pub fn homogeneous_dimension(&self) -> f64 {
        self.n as f64 + (1.0 + self.gamma) * self.l as f64
    }

    pub fn critical_exponents(&self) -> Result<CriticalExponents> {
        let ng = self.homogeneous_dimension();
        if ng <= 2.0 {
            return Err(Error::DegenerateDimension { n_gamma: ng });
        }
        Ok(CriticalExponents {
            sobolev: 2.0 * ng / (ng - 2.0),
            serrin_upper: (ng + 2.0) / (ng - 2.0),
            halfspace_lower: 1.0 + 4.0 / ng,
        })
    }

    /// `d(z, 0)`.
    pub fn norm(&self, z: &Point) -> f64 {
        debug_assert!(z.matches(self));
        let g = self.gamma;
        let x = z.x_norm();
        let y2 = z.y.iter().map(|v| v * v).sum::<f64>();
        let s = x.powf(2.0 + 2.0 * g) / ((1.0 + g) * (1.0 + g)) + y2;
        s.powf(1.0 / (2.0 + 2.0 * g))
    }

    /// `d(z, w) = d(z - w, 0)`.
    pub fn distance(&self, z: &Point, w: &Point) -> f64 {
        self.norm(&z.sub(w))
    }

    /// `δ_λ z = (λx, λ^{1+γ} y)`.
    pub fn dilate(&self, lambda: f64, z: &Point) -> Point {
        let ly = lambda.powf(1.0 + self.gamma);
        Point {
            x: z.x.iter().map(|v| lambda * v).collect(),
            y: z.y.iter().map(|v| ly * v).collect(),
        }
    }

    /// Grushin inversion `z ↦ (x / d^2, y / d^{2+2γ})`, an involution that maps
    /// `d(z, 0)` to `1 / d(z, 0)`.
    pub fn kelvin_point(&self, z: &Point) -> Result<Point> {
        let d = self.norm(z);
        if d < ORIGIN_THRESHOLD {
            return Err(Error::OriginSingularity { distance: d });
        }
        let sx = d.powi(-2);
        let sy = d.powf(-(2.0 + 2.0 * self.gamma));
        Ok(Point {
            x: z.x.iter().map(|v| sx * v).collect(),
            y: z.y.iter().map(|v| sy * v).collect(),
        })
    }
}

/// A point `z = (x, y)` split into its `x` and `y` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }

    pub fn origin(params: &GrushinParams) -> Self {
        Self {
            x: vec![0.0; params.n()],
            y: vec![0.0; params.l()],
        }
    }

    /// Builds a point from a flat coordinate slice `(x_1..x_N, y_1..y_l)`.
    pub fn from_coords(params: &GrushinParams, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), params.dim(), "coordinate count");
        Self {
            x: coords[..params.n()].to_vec(),
            y: coords[params.n()..].to_vec(),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// Coordinate `k` of the flat `(x, y)` vector.
    pub fn coord(&self, k: usize) -> f64 {
        if k < self.x.len() {
            self.x[k]
        } else {
            self.y[k - self.x.len()]
        }
    }

    pub fn coord_mut(&mut self, k: usize) -> &mut f64 {
        if k < self.x.len() {
            &mut self.x[k]
        } else {
            let n = self.x.len();
            &mut self.y[k - n]
        }
    }

    pub fn x_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Point) -> Point {
        Point {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    fn matches(&self, params: &GrushinParams) -> bool {
        self.x.len() == params.n() && self.y.len() == params.l()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn params(n: usize, l: usize, g: f64) -> GrushinParams {
        GrushinParams::new(n, l, g).unwrap()
    }

    fn random_point(rng: &mut SplitMix64, p: &GrushinParams, scale: f64) -> Point {
        Point::new(
            (0..p.n()).map(|_| rng.uniform(-scale, scale)).collect(),
            (0..p.l()).map(|_| rng.uniform(-scale, scale)).collect(),
        )
    }

    #[test]
    fn homogeneous_dimension_examples() {
        assert_eq!(params(1, 1, 1.0).homogeneous_dimension(), 3.0);
        assert_eq!(params(2, 1, 1.0).homogeneous_dimension(), 4.0);
        assert_eq!(params(1, 2, 0.5).homogeneous_dimension(), 4.0);
    }

    #[test]
    fn critical_exponent_examples() {
        let e = params(1, 1, 1.0).critical_exponents().unwrap();
        assert!((e.serrin_upper - 5.0).abs() < 1e-15);
        assert!((e.halfspace_lower - 7.0 / 3.0).abs() < 1e-15);
        assert!((e.sobolev - 6.0).abs() < 1e-15);

        let e = params(2, 1, 1.0).critical_exponents().unwrap();
        assert!((e.serrin_upper - 3.0).abs() < 1e-15);
        assert!((e.sobolev - 4.0).abs() < 1e-15);

        let e = params(1, 1, 0.5).critical_exponents().unwrap();
        assert!((e.serrin_upper - 9.0).abs() < 1e-12);
    }

    #[test]
    fn critical_exponents_need_dimension_above_two() {
        // N_γ = 1 + 1.0·1 ... smallest admissible sums stay above 2, so shrink γ.
        let p = params(1, 1, 1e-3);
        assert!(p.homogeneous_dimension() > 2.0);
        assert!(p.critical_exponents().is_ok());
        assert!(matches!(
            GrushinParams::new(1, 1, 0.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn critical_exponent_ordering_sweep() {
        for n in 1..=3 {
            for l in 1..=3 {
                for &g in &[0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
                    let p = params(n, l, g);
                    let ng = p.homogeneous_dimension();
                    assert!(ng > (n + l) as f64);
                    let e = p.critical_exponents().unwrap();
                    assert!(e.sobolev > 2.0);
                    assert!(e.halfspace_lower > 1.0);
                    if ng < 6.0 {
                        assert!(e.serrin_upper > e.halfspace_lower, "{n} {l} {g}");
                    }
                }
            }
        }
    }

    #[test]
    fn distance_examples() {
        let p = params(1, 1, 1.0);
        let d = p.norm(&Point::new(vec![1.0], vec![0.0]));
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        let d = p.norm(&Point::new(vec![0.0], vec![1.0]));
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_symmetric_and_zero_on_diagonal() {
        let p = params(2, 1, 0.7);
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let z = random_point(&mut rng, &p, 2.0);
            let w = random_point(&mut rng, &p, 2.0);
            assert_eq!(p.distance(&z, &w), p.distance(&w, &z));
            assert_eq!(p.distance(&z, &z), 0.0);
            assert!(p.distance(&z, &w) > 0.0);
        }
    }

    #[test]
    fn dilation_examples() {
        let p = params(1, 1, 1.0);
        let z = Point::new(vec![1.0], vec![1.0]);
        assert_eq!(p.dilate(1.0, &z), z);
        assert_eq!(p.dilate(2.0, &z), Point::new(vec![2.0], vec![4.0]));
    }

    #[test]
    fn dilation_homogeneity_and_group_law() {
        let mut rng = SplitMix64::new(11);
        for (n, l, g) in [(1, 1, 1.0), (2, 1, 0.5), (1, 2, 1.7)] {
            let p = params(n, l, g);
            for _ in 0..1000 {
                let z = random_point(&mut rng, &p, 3.0);
                let lam = rng.uniform(0.05, 20.0);
                let d = p.norm(&z);
                let dl = p.norm(&p.dilate(lam, &z));
                assert!((dl - lam * d).abs() <= 1e-13 * (1.0 + lam * d));
                let back = p.dilate(lam, &p.dilate(1.0 / lam, &z));
                for (a, b) in back.coords().iter().zip(z.coords()) {
                    assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn kelvin_point_examples() {
        let p = params(1, 1, 1.0);
        let z = Point::new(vec![0.0], vec![2.0]);
        let zt = p.kelvin_point(&z).unwrap();
        assert_eq!(zt.x, vec![0.0]);
        assert!((zt.y[0] - 0.5).abs() < 1e-15);

        // unit sphere is fixed: x = 0, |y| = 1
        let z = Point::new(vec![0.0], vec![-1.0]);
        assert_eq!(p.kelvin_point(&z).unwrap(), z);
        let z = Point::new(vec![2f64.sqrt()], vec![0.0]);
        let zt = p.kelvin_point(&z).unwrap();
        assert!((zt.x[0] - z.x[0]).abs() < 1e-15);

        assert!(matches!(
            p.kelvin_point(&Point::origin(&p)),
            Err(Error::OriginSingularity { .. })
        ));
    }

    #[test]
    fn kelvin_involution_and_metric_inversion() {
        let mut rng = SplitMix64::new(5);
        for (n, l, g) in [(1, 1, 1.0), (2, 1, 0.5), (1, 2, 2.5)] {
            let p = params(n, l, g);
            let mut count = 0;
            while count < 1000 {
                let z = random_point(&mut rng, &p, 6.0);
                let d = p.norm(&z);
                if !(0.1..10.0).contains(&d) {
                    continue;
                }
                count += 1;
                let zt = p.kelvin_point(&z).unwrap();
                assert!((p.norm(&zt) * d - 1.0).abs() < 1e-13);
                let back = p.kelvin_point(&zt).unwrap();
                for (a, b) in back.coords().iter().zip(z.coords()) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-15);
                }
            }
        }
    }
}
