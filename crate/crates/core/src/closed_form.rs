//! Explicit test functions with exact Grushin Laplacians, and the
//! central-difference oracle they are checked against.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{GrushinParams, Point, ORIGIN_THRESHOLD};
use crate::{Error, Result};

/// Default step for the finite-difference oracle.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

type PointFn = dyn Fn(&Point) -> f64 + Send + Sync;
type RegionFn = dyn Fn(&Point) -> bool + Send + Sync;

/// A real function of a point together with the region where it is smooth.
#[derive(Clone)]
pub struct ScalarFunction {
    f: Arc<PointFn>,
    region: Option<Arc<RegionFn>>,
}

impl ScalarFunction {
    /// A function smooth everywhere.
    pub fn new(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            region: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    /// Restricts the declared smoothness region (intersected with any existing one).
    pub fn with_region(self, region: impl Fn(&Point) -> bool + Send + Sync + 'static) -> Self {
        let region: Arc<RegionFn> = match self.region {
            Some(prev) => Arc::new(move |z| prev(z) && region(z)),
            None => Arc::new(region),
        };
        Self {
            f: self.f,
            region: Some(region),
        }
    }

    pub fn eval(&self, z: &Point) -> f64 {
        (self.f)(z)
    }

    pub fn contains(&self, z: &Point) -> bool {
        self.region.as_ref().map_or(true, |r| r(z))
    }
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("restricted", &self.region.is_some())
            .finish()
    }
}

/// Parameters of `Ψ(z) = c · exp(-a (d(z,0) - R))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub a: f64,
    pub c: f64,
    pub radius: f64,
}

impl BarrierSpec {
    pub fn new(a: f64, c: f64, radius: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && radius > 0.0) {
            return Err(Error::InvalidParams(format!(
                "barrier needs a, c, R > 0 (got a={a}, c={c}, R={radius})"
            )));
        }
        Ok(Self { a, c, radius })
    }
}

pub fn barrier_value(z: &Point, spec: &BarrierSpec, params: &GrushinParams) -> f64 {
    spec.c * (-spec.a * (params.norm(z) - spec.radius)).exp()
}

/// Exact `Δ_γ Ψ`:
///
/// ```text
/// Δ_γ Ψ = a² Ψ |x|^{2γ} d^{-2γ} / (1+γ)²  -  (N_γ - 1) a Ψ |x|^{2γ} d^{-1-2γ} / (1+γ)²
/// ```
pub fn barrier_grushin_laplacian(
    z: &Point,
    spec: &BarrierSpec,
    params: &GrushinParams,
) -> Result<f64> {
    let d = nonzero_norm(z, params)?;
    let g = params.gamma();
    let psi = barrier_value(z, spec, params);
    let xw = z.x_norm().powf(2.0 * g) / ((1.0 + g) * (1.0 + g));
    let a = spec.a;
    let ng = params.homogeneous_dimension();
    Ok(a * a * psi * xw * d.powf(-2.0 * g) - (ng - 1.0) * a * psi * xw * d.powf(-1.0 - 2.0 * g))
}

/// The weight `(|x| / d)^{2γ} / (1+γ)²` multiplying `a²Ψ` in `Δ_γ Ψ`.
///
/// Bounded by `(1+γ)^{2γ/(1+γ) - 2} ≤ 1` because `|x|^{2+2γ} ≤ (1+γ)² d^{2+2γ}`.
pub fn barrier_weight(z: &Point, params: &GrushinParams) -> Result<f64> {
    let d = nonzero_norm(z, params)?;
    let g = params.gamma();
    Ok((z.x_norm() / d).powf(2.0 * g) / ((1.0 + g) * (1.0 + g)))
}

/// `d(z,0)^{-b}`.
pub fn power_value(z: &Point, b: f64, params: &GrushinParams) -> f64 {
    params.norm(z).powf(-b)
}

/// Exact `Δ_γ d^{-b} = b (b - N_γ + 2) |x|^{2γ} d^{-b-2-2γ} / (1+γ)²`.
pub fn power_grushin_laplacian(z: &Point, b: f64, params: &GrushinParams) -> Result<f64> {
    let d = nonzero_norm(z, params)?;
    let g = params.gamma();
    let ng = params.homogeneous_dimension();
    Ok(b * (b - ng + 2.0) * z.x_norm().powf(2.0 * g) * d.powf(-b - 2.0 - 2.0 * g)
        / ((1.0 + g) * (1.0 + g)))
}

pub fn barrier_function(spec: BarrierSpec, params: GrushinParams) -> ScalarFunction {
    ScalarFunction::new(move |z| barrier_value(z, &spec, &params))
        .with_region(move |z| params.norm(z) > ORIGIN_THRESHOLD)
}

pub fn power_function(b: f64, params: GrushinParams) -> ScalarFunction {
    ScalarFunction::new(move |z| power_value(z, b, &params))
        .with_region(move |z| params.norm(z) > ORIGIN_THRESHOLD)
}

/// Second-order central-difference approximation of
/// `Δ_x f + |x|^{2γ} Δ_y f` at `z`.
pub fn fd_grushin_laplacian(
    f: &ScalarFunction,
    z: &Point,
    h: f64,
    params: &GrushinParams,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParams(format!("step must be positive (got {h})")));
    }
    if !f.contains(z) {
        return Err(Error::OutsideSmoothRegion);
    }
    let f0 = f.eval(z);
    let mut zz = z.clone();
    let mut second = |k: usize| -> Result<f64> {
        let c = zz.coord(k);
        *zz.coord_mut(k) = c + h;
        let ok_plus = f.contains(&zz);
        let fp = f.eval(&zz);
        *zz.coord_mut(k) = c - h;
        let ok_minus = f.contains(&zz);
        let fm = f.eval(&zz);
        *zz.coord_mut(k) = c;
        if !(ok_plus && ok_minus) {
            return Err(Error::OutsideSmoothRegion);
        }
        Ok((fp - 2.0 * f0 + fm) / (h * h))
    };
    let mut lap_x = 0.0;
    for k in 0..params.n() {
        lap_x += second(k)?;
    }
    let mut lap_y = 0.0;
    for k in params.n()..params.dim() {
        lap_y += second(k)?;
    }
    Ok(lap_x + z.x_norm().powf(2.0 * params.gamma()) * lap_y)
}

/// One Richardson step on [`fd_grushin_laplacian`]: `(4 L(h/2) - L(h)) / 3`.
pub fn fd_grushin_laplacian_richardson(
    f: &ScalarFunction,
    z: &Point,
    h: f64,
    params: &GrushinParams,
) -> Result<f64> {
    let coarse = fd_grushin_laplacian(f, z, h, params)?;
    let fine = fd_grushin_laplacian(f, z, 0.5 * h, params)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn nonzero_norm(z: &Point, params: &GrushinParams) -> Result<f64> {
    let d = params.norm(z);
    if d < ORIGIN_THRESHOLD {
        Err(Error::OriginSingularity { distance: d })
    } else {
        Ok(d)
    }
}
