//! Kelvin transform `w(z̃) = d(z,0)^{N_γ-2} u(z)` with `z = kelvin_point(z̃)`,
//! and a pointwise check of `Δ_γ w(z̃) = d(z,0)^{N_γ+2} Δ_γ u(z)`.

use std::io::Write;

use serde::Serialize;

use crate::closed_form::{fd_grushin_laplacian, ScalarFunction};
use crate::geometry::{GrushinParams, Point, ORIGIN_THRESHOLD};
use crate::io::fmt_f64;
use crate::{Error, Result};

/// Regulariser in relative residuals.
pub const RESIDUAL_EPS: f64 = 1e-12;

/// Original function and its transform.
#[derive(Debug, Clone)]
pub struct KelvinPair {
    pub u: ScalarFunction,
    pub w: ScalarFunction,
}

impl KelvinPair {
    pub fn new(u: ScalarFunction, params: GrushinParams) -> Self {
        let w = kelvin_transform(&u, params);
        Self { u, w }
    }
}

/// Returns `z̃ ↦ d(z,0)^{N_γ-2} u(z)`. The transform is smooth wherever
/// `z̃ ≠ 0` and `u` is smooth at the mapped point.
pub fn kelvin_transform(u: &ScalarFunction, params: GrushinParams) -> ScalarFunction {
    let weight_exp = params.homogeneous_dimension() - 2.0;
    let value_fn = u.clone();
    let region_fn = u.clone();
    ScalarFunction::new(move |zt| match params.kelvin_point(zt) {
        Ok(z) => params.norm(&z).powf(weight_exp) * value_fn.eval(&z),
        Err(_) => f64::NAN,
    })
    .with_region(move |zt| {
        params.norm(zt) >= ORIGIN_THRESHOLD
            && params
                .kelvin_point(zt)
                .map(|z| region_fn.contains(&z))
                .unwrap_or(false)
    })
}

/// Evaluates the transform at a single point, reporting the origin singularity.
pub fn kelvin_value(u: &ScalarFunction, zt: &Point, params: &GrushinParams) -> Result<f64> {
    let z = params.kelvin_point(zt)?;
    Ok(params.norm(&z).powf(params.homogeneous_dimension() - 2.0) * u.eval(&z))
}

#[derive(Debug, Clone, Serialize)]
pub struct KelvinSample {
    pub z_tilde: Point,
    pub z: Point,
    /// `Δ_γ w(z̃)`
    pub lhs: f64,
    /// `d(z,0)^{N_γ+2} Δ_γ u(z)`
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KelvinReport {
    pub step: f64,
    pub samples: Vec<KelvinSample>,
    pub max_rel: f64,
    pub mean_rel: f64,
    pub max_abs: f64,
}

impl KelvinReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(first) = self.samples.first() else {
            writeln!(out, "lhs,rhs,abs_residual,rel_residual")?;
            return Ok(());
        };
        let n = first.z.x.len();
        let l = first.z.y.len();
        let mut header = Vec::new();
        for prefix in ["zt", "z"] {
            header.extend((1..=n).map(|i| format!("{prefix}_x{i}")));
            header.extend((1..=l).map(|j| format!("{prefix}_y{j}")));
        }
        header.extend(["lhs", "rhs", "abs_residual", "rel_residual"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row: Vec<String> = s.z_tilde.coords().into_iter().map(fmt_f64).collect();
            row.extend(s.z.coords().into_iter().map(fmt_f64));
            row.extend([s.lhs, s.rhs, s.abs_residual, s.rel_residual].map(fmt_f64));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Both Laplacians are finite differences in their own coordinates; points are
/// related through the closed-form inversion, never through a grid.
pub fn verify_kelvin_identity(
    u: &ScalarFunction,
    samples: &[Point],
    h: f64,
    params: &GrushinParams,
) -> Result<KelvinReport> {
    let w = kelvin_transform(u, *params);
    let weight_exp = params.homogeneous_dimension() + 2.0;
    let mut rows = Vec::with_capacity(samples.len());
    for zt in samples {
        let z = params.kelvin_point(zt)?;
        let lhs = fd_grushin_laplacian(&w, zt, h, params)?;
        let rhs = params.norm(&z).powf(weight_exp) * fd_grushin_laplacian(u, &z, h, params)?;
        let abs_residual = (lhs - rhs).abs();
        rows.push(KelvinSample {
            z_tilde: zt.clone(),
            z,
            lhs,
            rhs,
            abs_residual,
            rel_residual: abs_residual / (rhs.abs() + RESIDUAL_EPS),
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParams("no Kelvin samples given".into()));
    }
    let max_rel = rows.iter().map(|r| r.rel_residual).fold(0.0, f64::max);
    let max_abs = rows.iter().map(|r| r.abs_residual).fold(0.0, f64::max);
    let mean_rel = rows.iter().map(|r| r.rel_residual).sum::<f64>() / rows.len() as f64;
    Ok(KelvinReport {
        step: h,
        samples: rows,
        max_rel,
        mean_rel,
        max_abs,
    })
}

/// Smooth bump `exp(-1/((d-r0)(r1-d)))` supported in the annulus `r0 < d < r1`.
pub fn annular_bump(params: GrushinParams, r0: f64, r1: f64) -> ScalarFunction {
    ScalarFunction::new(move |z| {
        let d = params.norm(z);
        if d <= r0 || d >= r1 {
            0.0
        } else {
            let scale = 0.25 * (r1 - r0) * (r1 - r0);
            (scale.recip() - ((d - r0) * (r1 - d)).recip()).exp()
        }
    })
    .with_region(move |z| params.norm(z) > ORIGIN_THRESHOLD)
}
