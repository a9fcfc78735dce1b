//! Numerical checks of the closed forms, the Kelvin identity and the discrete
//! operator, shared by the experiment runner and the `verify` suites.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::closed_form::{
    barrier_function, barrier_grushin_laplacian, fd_grushin_laplacian, fd_grushin_laplacian_richardson,
    power_function, power_grushin_laplacian, BarrierSpec, ScalarFunction,
};
use crate::discrete::{solve_linear, DiscreteOperator, Field, GridSpec};
use crate::geometry::{GrushinParams, Point};
use crate::io::fmt_f64;
use crate::kelvin::{annular_bump, kelvin_transform, verify_kelvin_identity, KelvinReport};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Where identity test points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingRegion {
    /// Points are drawn uniformly from `[-half_width, half_width]^{N+l}`.
    pub half_width: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    pub min_x_norm: f64,
}

impl Default for SamplingRegion {
    fn default() -> Self {
        Self { half_width: 3.0, min_distance: 0.5, max_distance: f64::INFINITY, min_x_norm: 0.25 }
    }
}

/// `count` seeded points from `region` by rejection sampling. Coordinates are
/// drawn in the order x₁..x_N, y₁..y_l.
pub fn sample_points(params: &GrushinParams, region: &SamplingRegion, count: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    let w = region.half_width;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) + 10_000 {
            return Err(Error::InvalidParams("sampling region is (nearly) empty".into()));
        }
        let coords: Vec<f64> = (0..params.dim()).map(|_| rng.uniform(-w, w)).collect();
        let z = Point::from_coords(params, &coords);
        let d = params.norm(&z);
        if d > region.min_distance && d < region.max_distance && z.x_norm() > region.min_x_norm {
            out.push(z);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub point: Point,
    pub closed_form: f64,
    pub finite_difference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// Closed-form Grushin Laplacian against the central-difference oracle.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub step: f64,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Largest absolute error at step `h/2`.
    pub max_abs_error_half: f64,
    /// `max_abs_error / max_abs_error_half`; about 4 for a second-order stencil.
    pub error_ratio: f64,
    /// Largest absolute error of the Richardson-extrapolated difference.
    pub richardson_max_abs: f64,
    #[serde(skip)]
    pub rows: Vec<IdentityRow>,
}

fn identity_check(
    name: String,
    f: &ScalarFunction,
    exact: impl Fn(&Point) -> Result<f64>,
    points: &[Point],
    h: f64,
    params: &GrushinParams,
) -> Result<IdentityCheck> {
    if points.is_empty() {
        return Err(Error::InvalidParams("no sample points".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    let mut max_abs_error_half: f64 = 0.0;
    let mut richardson_max_abs: f64 = 0.0;
    for z in points {
        let closed = exact(z)?;
        let fd = fd_grushin_laplacian(f, z, h, params)?;
        let fd_half = fd_grushin_laplacian(f, z, 0.5 * h, params)?;
        let rich = fd_grushin_laplacian_richardson(f, z, h, params)?;
        let abs_error = (fd - closed).abs();
        max_abs_error_half = max_abs_error_half.max((fd_half - closed).abs());
        richardson_max_abs = richardson_max_abs.max((rich - closed).abs());
        rows.push(IdentityRow {
            point: z.clone(),
            closed_form: closed,
            finite_difference: fd,
            abs_error,
            rel_error: if closed != 0.0 { abs_error / closed.abs() } else { f64::INFINITY },
        });
    }
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(IdentityCheck {
        name,
        step: h,
        max_rel_error,
        max_abs_error,
        max_abs_error_half,
        error_ratio: max_abs_error / max_abs_error_half,
        richardson_max_abs,
        rows,
    })
}

/// Barrier used by the identity suite: `a = 2N_γ - 1`, `c = 1`, `R = 1`.
/// `Δ_γΨ` changes sign on `d = (N_γ - 1)/a < 0.5`, outside the sampling
/// region, so relative errors stay meaningful.
pub fn identity_barrier(params: &GrushinParams) -> Result<BarrierSpec> {
    BarrierSpec::new(2.0 * params.homogeneous_dimension() - 1.0, 1.0, 1.0)
}

pub fn barrier_identity(spec: BarrierSpec, points: &[Point], h: f64, params: &GrushinParams) -> Result<IdentityCheck> {
    let f = barrier_function(spec, *params);
    identity_check(
        format!("barrier a={}", spec.a),
        &f,
        |z| barrier_grushin_laplacian(z, &spec, params),
        points,
        h,
        params,
    )
}

pub fn power_identity(b: f64, points: &[Point], h: f64, params: &GrushinParams) -> Result<IdentityCheck> {
    let f = power_function(b, *params);
    identity_check(format!("power b={b}"), &f, |z| power_grushin_laplacian(z, b, params), points, h, params)
}

/// Exponents checked by the identity suite: `0.3`, `0.5` and the harmonic
/// exponent `N_γ - 2`.
pub fn identity_power_exponents(params: &GrushinParams) -> Vec<f64> {
    let harmonic = params.homogeneous_dimension() - 2.0;
    let mut b: Vec<f64> = [0.3, 0.5].into_iter().filter(|&b| (b - harmonic).abs() > 1e-12).collect();
    b.push(harmonic);
    b
}

pub fn write_identity_csv<W: Write>(checks: &[IdentityCheck], mut out: W) -> Result<()> {
    let Some(first) = checks.iter().find(|c| !c.rows.is_empty()) else {
        writeln!(out, "check,closed_form,finite_difference,abs_error,rel_error")?;
        return Ok(());
    };
    let p = &first.rows[0].point;
    let mut header = vec!["check".to_string()];
    header.extend((1..=p.x.len()).map(|i| format!("x{i}")));
    header.extend((1..=p.y.len()).map(|j| format!("y{j}")));
    header.extend(["closed_form", "finite_difference", "abs_error", "rel_error"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for c in checks {
        for r in &c.rows {
            let mut row = vec![c.name.clone()];
            row.extend(r.point.coords().into_iter().map(fmt_f64));
            row.extend([r.closed_form, r.finite_difference, r.abs_error, r.rel_error].map(fmt_f64));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

/// Inner and outer radius of the annular bump used by the Kelvin check.
pub const KELVIN_BUMP: (f64, f64) = (0.5, 2.0);

/// Kelvin test points: `z̃` with `d(z̃) ∈ (1/1.6, 1/0.8)` and `|x̃| > 0.25`,
/// so the preimages `z` lie in the bulk of the bump.
pub fn kelvin_region() -> SamplingRegion {
    SamplingRegion { half_width: 1.5, min_distance: 1.0 / 1.6, max_distance: 1.0 / 0.8, min_x_norm: 0.25 }
}

#[derive(Debug, Clone, Serialize)]
pub struct KelvinCheck {
    pub step: f64,
    pub max_rel_residual: f64,
    pub max_rel_residual_half: f64,
    /// `log₂` of the ratio of largest absolute residuals at `h` and `h/2`.
    pub observed_order: f64,
    /// Largest `|K(K(z)) - z|` over the samples.
    pub point_involution_error: f64,
    /// Largest `|K[K[u]](z) - u(z)|` over the samples.
    pub function_involution_error: f64,
    #[serde(skip)]
    pub report: KelvinReport,
}

pub fn kelvin_check(params: &GrushinParams, samples: &[Point], h: f64) -> Result<KelvinCheck> {
    let u = annular_bump(*params, KELVIN_BUMP.0, KELVIN_BUMP.1);
    let report = verify_kelvin_identity(&u, samples, h, params)?;
    let half = verify_kelvin_identity(&u, samples, 0.5 * h, params)?;
    let ww = kelvin_transform(&kelvin_transform(&u, *params), *params);
    let mut point_involution_error: f64 = 0.0;
    let mut function_involution_error: f64 = 0.0;
    for z in samples {
        let back = params.kelvin_point(&params.kelvin_point(z)?)?;
        let err = back.coords().iter().zip(z.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        point_involution_error = point_involution_error.max(err);
        function_involution_error = function_involution_error.max((ww.eval(z) - u.eval(z)).abs());
    }
    Ok(KelvinCheck {
        step: h,
        max_rel_residual: report.max_rel,
        max_rel_residual_half: half.max_rel,
        observed_order: (report.max_abs / half.max_abs).log2(),
        point_involution_error,
        function_involution_error,
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximumPrincipleCheck {
    pub solves: usize,
    /// Smallest interior nodal value over all solves.
    pub min_value: f64,
    pub max_cg_iterations: usize,
}

/// Solves `A u = f` for `count` seeded right-hand sides with values uniform in
/// `[0, 1)` on interior nodes and reports the smallest nodal value.
pub fn maximum_principle_check(grid: &Arc<GridSpec>, count: usize, seed: u64) -> Result<MaximumPrincipleCheck> {
    let op = DiscreteOperator::assemble(grid)?;
    let mut rng = SplitMix64::new(seed);
    let mut min_value = f64::INFINITY;
    let mut max_cg_iterations = 0;
    for _ in 0..count {
        let rhs = seeded_rhs(grid, &mut rng);
        let sol = solve_linear(&op, &rhs, 1e-12, 100_000)?;
        let interior_min = op.interior_nodes().iter().map(|&i| sol.field.values()[i]).fold(f64::INFINITY, f64::min);
        min_value = min_value.min(interior_min);
        max_cg_iterations = max_cg_iterations.max(sol.iterations);
    }
    Ok(MaximumPrincipleCheck { solves: count, min_value, max_cg_iterations })
}

/// Interior values uniform in `[0, 1)` in node order, zero on the boundary.
pub fn seeded_rhs(grid: &Arc<GridSpec>, rng: &mut SplitMix64) -> Field {
    let vals = (0..grid.node_count())
        .map(|i| if grid.is_boundary(i) { 0.0 } else { rng.next_f64() })
        .collect();
    Field::from_values(grid.clone(), vals).expect("length matches grid")
}
