//! Grid realisations of the symmetry, decay and rescaling arguments:
//! moving-plane deficits `ω_λ = u - u(z^λ)`, evenness/radial deficits in `y`,
//! log-linear tail fits, blow-up rescaling and anisotropic stretching.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::closed_form::ScalarFunction;
use crate::discrete::{Field, GridSpec};
use crate::geometry::{GrushinParams, Point};
use crate::io::fmt_f64;
use crate::semilinear::{SolveReport, TRIVIAL_THRESHOLD};
use crate::{Error, Result};

/// Nodes per axis of the default blow-up reference grid.
pub const BLOWUP_NODES: usize = 129;
pub const BLOWUP_NODES_3D: usize = 63;
/// Half-width of the default blow-up reference box in rescaled coordinates.
pub const BLOWUP_HALF_WIDTH: f64 = 6.0;
/// Smallest value entering a log-linear tail fit.
pub const TAIL_FLOOR: f64 = 1e-14;

/// Family of planes `{y_axis = λ}`; `axis` indexes the `y` block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionSpec {
    pub axis: usize,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficitPoint {
    pub lambda: f64,
    /// `sup_{Σ_λ} ω_λ` over grid nodes.
    pub deficit: f64,
    /// Nodes of `Σ_λ` that entered the supremum.
    pub nodes: usize,
}

impl ReflectionSpec {
    pub fn new(axis: usize, lambdas: Vec<f64>) -> Self {
        Self { axis, lambdas }
    }

    /// `count` planes spread over `(from, to]`, snapped to half-node offsets
    /// so reflections map nodes onto nodes.
    pub fn snapped(grid: &GridSpec, axis: usize, count: usize, from: f64, to: f64) -> Result<Self> {
        let k = grid_axis(grid, axis)?;
        let half = 0.5 * grid.spacing(k);
        let lo = grid.lo()[k];
        let mut lambdas: Vec<f64> = (1..=count)
            .map(|j| {
                let target = from + (to - from) * j as f64 / count as f64;
                lo + ((target - lo) / half).round() * half
            })
            .collect();
        lambdas.dedup();
        Ok(Self { axis, lambdas })
    }
}

fn grid_axis(grid: &GridSpec, axis: usize) -> Result<usize> {
    let p = grid.params();
    if axis >= p.l() {
        return Err(Error::InvalidParams(format!(
            "reflection axis {axis} out of range for l = {}",
            p.l()
        )));
    }
    Ok(p.n() + axis)
}

/// Value of `u` at node `idx` with coordinate `k` replaced by `c`, linear in
/// that coordinate and zero outside the box.
fn value_along_axis(u: &Field, idx: usize, k: usize, c: f64) -> f64 {
    let grid = u.grid();
    let (lo, hi) = (grid.lo()[k], grid.hi()[k]);
    let h = grid.spacing(k);
    let tol = 1e-9 * h;
    if c < lo - tol || c > hi + tol {
        return 0.0;
    }
    let n = grid.dims()[k];
    let stride = grid.strides()[k];
    let m = grid.multi_index(idx)[k];
    let base_idx = idx - m * stride;
    let t = ((c - lo) / h).clamp(0.0, (n - 1) as f64);
    let near = t.round();
    if (t - near).abs() < 1e-9 {
        return u.values()[base_idx + near as usize * stride];
    }
    let i = (t.floor() as usize).min(n - 2);
    let f = t - i as f64;
    let v = u.values();
    (1.0 - f) * v[base_idx + i * stride] + f * v[base_idx + (i + 1) * stride]
}

/// `ω_λ(z) = u(z) - u(z^λ)` at every node, with `u` extended by zero.
pub fn omega_field(u: &Field, axis: usize, lambda: f64) -> Result<Field> {
    let grid = u.grid();
    let k = grid_axis(grid, axis)?;
    let vals: Vec<f64> = (0..grid.node_count())
        .map(|i| {
            let y = grid.coords(i)[k];
            u.values()[i] - value_along_axis(u, i, k, 2.0 * lambda - y)
        })
        .collect();
    Field::from_values(grid.clone(), vals)
}

/// `sup_{Σ_λ} ω_λ` for every plane, where `Σ_λ = {y_axis > λ}` restricted to
/// interior nodes. Boundary nodes carry the Dirichlet zero and would pin the
/// supremum at `0` from below.
pub fn reflection_deficit(u: &Field, spec: &ReflectionSpec) -> Result<Vec<DeficitPoint>> {
    let grid = u.grid();
    let k = grid_axis(grid, spec.axis)?;
    let tol = 1e-9 * grid.spacing(k);
    let mut out = Vec::with_capacity(spec.lambdas.len());
    for &lambda in &spec.lambdas {
        if !(lambda >= grid.lo()[k] - tol && lambda < grid.hi()[k] - tol) {
            return Err(Error::PlaneOutsideGrid { lambda });
        }
        let mut deficit = f64::NEG_INFINITY;
        let mut nodes = 0;
        for i in 0..grid.node_count() {
            let y = grid.coords(i)[k];
            if y <= lambda + tol || grid.is_boundary(i) {
                continue;
            }
            nodes += 1;
            let w = u.values()[i] - value_along_axis(u, i, k, 2.0 * lambda - y);
            deficit = deficit.max(w);
        }
        out.push(DeficitPoint { lambda, deficit, nodes });
    }
    Ok(out)
}

pub fn write_deficit_csv<W: Write>(rows: &[DeficitPoint], mut out: W) -> Result<()> {
    writeln!(out, "lambda,deficit,nodes")?;
    for r in rows {
        writeln!(out, "{},{},{}", fmt_f64(r.lambda), fmt_f64(r.deficit), r.nodes)?;
    }
    Ok(())
}

/// Largest `|u(z) - u(z')|` over node pairs sharing the same `x` and the same
/// `|y|`. For `l = 1` this is the evenness deficit `|u(x,y) - u(x,-y)|`.
///
/// Only exactly representable pairs are compared; nothing is interpolated.
pub fn radial_y_deficit(u: &Field) -> f64 {
    let grid = u.grid();
    let n = grid.params().n();
    let hmin = grid.spacings()[n..].iter().copied().fold(f64::INFINITY, f64::min);
    let quantum = 1e-9 * hmin * hmin;
    let mut groups: HashMap<(Vec<usize>, i64), (f64, f64)> = HashMap::new();
    for i in 0..grid.node_count() {
        let m = grid.multi_index(i);
        let c = grid.coords(i);
        let r2: f64 = c[n..].iter().map(|v| v * v).sum();
        let key = (m[..n].to_vec(), (r2 / quantum).round() as i64);
        let v = u.values()[i];
        let e = groups.entry(key).or_insert((v, v));
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    }
    groups.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
}

/// Least-squares fit of `log u ≈ log c - a (d - inner)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub c: f64,
    pub r_squared: f64,
    pub samples_used: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

/// Shells used by [`decay_fit`].
pub const DECAY_SHELLS: usize = 40;

/// Fits the envelope `ρ ↦ max_{d(z,0) ≈ ρ} u` on `inner < d < outer`.
///
/// The annulus is cut into [`DECAY_SHELLS`] shells of equal width; each shell
/// contributes its largest nodal value (if above `1e-14`) at that node's own
/// `d`, so a function of `d` alone is fitted exactly. The decay rate of `u`
/// depends on the direction, so the envelope is the quantity an exponential
/// barrier controls.
pub fn decay_fit(u: &Field, inner_radius: f64, outer_radius: f64) -> Result<DecayFit> {
    check_annulus(inner_radius, outer_radius)?;
    let grid = u.grid();
    let params = grid.params();
    let width = (outer_radius - inner_radius) / DECAY_SHELLS as f64;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; DECAY_SHELLS];
    for (i, &v) in u.values().iter().enumerate() {
        let d = params.norm(&grid.point(i));
        if v <= TAIL_FLOOR || d <= inner_radius || d >= outer_radius {
            continue;
        }
        let b = (((d - inner_radius) / width) as usize).min(DECAY_SHELLS - 1);
        if best[b].map_or(true, |(_, w)| v > w) {
            best[b] = Some((d, v));
        }
    }
    let samples: Vec<(f64, f64)> = best.into_iter().flatten().collect();
    fit_log_linear(&samples, inner_radius, outer_radius)
}

/// Fits every node with `inner < d(z,0) < outer` and `u > 1e-14`.
pub fn decay_fit_pointwise(u: &Field, inner_radius: f64, outer_radius: f64) -> Result<DecayFit> {
    check_annulus(inner_radius, outer_radius)?;
    let grid = u.grid();
    let params = grid.params();
    let samples: Vec<(f64, f64)> = u
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > TAIL_FLOOR)
        .map(|(i, &v)| (params.norm(&grid.point(i)), v))
        .filter(|&(d, _)| d > inner_radius && d < outer_radius)
        .collect();
    fit_log_linear(&samples, inner_radius, outer_radius)
}

fn check_annulus(inner: f64, outer: f64) -> Result<()> {
    if inner >= 0.0 && outer > inner && outer.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("need 0 <= inner < outer (got {inner}, {outer})")))
    }
}

fn fit_log_linear(samples: &[(f64, f64)], inner_radius: f64, outer_radius: f64) -> Result<DecayFit> {
    const NEEDED: usize = 3;
    if samples.len() < NEEDED {
        return Err(Error::InsufficientTail { found: samples.len(), needed: NEEDED });
    }
    let ts: Vec<f64> = samples.iter().map(|(d, _)| d - inner_radius).collect();
    let ls: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let lm = ls.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let stl: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - tm) * (l - lm)).sum();
    if stt == 0.0 {
        return Err(Error::InsufficientTail { found: 1, needed: NEEDED });
    }
    let slope = stl / stt;
    let intercept = lm - slope * tm;
    let ss_tot: f64 = ls.iter().map(|l| (l - lm) * (l - lm)).sum();
    let ss_res: f64 = ts
        .iter()
        .zip(&ls)
        .map(|(t, l)| {
            let e = l - (intercept + slope * t);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DecayFit {
        a: -slope,
        c: intercept.exp(),
        r_squared,
        samples_used: samples.len(),
        inner_radius,
        outer_radius,
    })
}

pub fn write_decay_csv<W: Write>(fit: &DecayFit, mut out: W) -> Result<()> {
    writeln!(out, "inner_radius,outer_radius,a,c,r_squared,samples_used")?;
    writeln!(
        out,
        "{},{},{},{},{},{}",
        fmt_f64(fit.inner_radius),
        fmt_f64(fit.outer_radius),
        fmt_f64(fit.a),
        fmt_f64(fit.c),
        fmt_f64(fit.r_squared),
        fit.samples_used
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BlowupMember {
    /// `λ_k = M_k^{-(p-1)/2}`
    pub lambda: f64,
    /// `M_k = sup u_k`
    pub max_value: f64,
    /// Maximiser of `u_k`; the `y` part is the recentring shift.
    pub center: Point,
    pub field: Field,
    pub sup: f64,
    pub value_at_origin: f64,
}

#[derive(Debug, Clone)]
pub struct BlowupSequence {
    pub p: f64,
    pub members: Vec<BlowupMember>,
}

impl BlowupSequence {
    /// Largest pairwise sup-distance between rescaled profiles.
    pub fn collapse_distance(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                if let Ok(d) = a.field.sup_abs_diff(&b.field) {
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(first) = self.members.first() else {
            writeln!(out, "member,lambda,max_value,sup,value_at_origin")?;
            return Ok(());
        };
        let mut header = vec!["member".to_string(), "lambda".into(), "max_value".into()];
        header.extend((1..=first.center.x.len()).map(|i| format!("center_x{i}")));
        header.extend((1..=first.center.y.len()).map(|j| format!("center_y{j}")));
        header.extend(["sup", "value_at_origin"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for (k, m) in self.members.iter().enumerate() {
            let mut row = vec![k.to_string(), fmt_f64(m.lambda), fmt_f64(m.max_value)];
            row.extend(m.center.coords().into_iter().map(fmt_f64));
            row.push(fmt_f64(m.sup));
            row.push(fmt_f64(m.value_at_origin));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Reference grid `[-6, 6]^{N+l}` with 129 nodes per axis in 2D and
/// [`BLOWUP_NODES_3D`] beyond, to respect [`crate::discrete::MAX_NODES_3D`].
pub fn blowup_reference_grid(params: GrushinParams) -> Result<Arc<GridSpec>> {
    let nodes = if params.dim() <= 2 { BLOWUP_NODES } else { BLOWUP_NODES_3D };
    Ok(Arc::new(GridSpec::cube(params, BLOWUP_HALF_WIDTH, nodes)?))
}

pub fn blowup_rescale(reports: &[SolveReport], p: f64, params: GrushinParams) -> Result<BlowupSequence> {
    blowup_rescale_on(reports, p, &blowup_reference_grid(params)?)
}

/// `v_k(z̃) = λ_k^{2/(p-1)} u_k(λ_k x̃, λ_k^{1+γ} ỹ + r_k)` sampled on
/// `reference` by multilinear interpolation (zero outside `u_k`'s box), where
/// `r_k` is the `y` part of the maximiser of `u_k`.
pub fn blowup_rescale_on(
    reports: &[SolveReport],
    p: f64,
    reference: &Arc<GridSpec>,
) -> Result<BlowupSequence> {
    if !(p > 1.0) {
        return Err(Error::InvalidParams(format!("exponent must exceed 1 (got {p})")));
    }
    let params = *reference.params();
    let g = params.gamma();
    let n = params.n();
    let members = reports
        .iter()
        .map(|rep| {
            let m = rep.sup_value;
            if !(m >= TRIVIAL_THRESHOLD) {
                return Err(Error::DegenerateMaximum { sup: m });
            }
            let lambda = m.powf(-(p - 1.0) / 2.0);
            let ly = lambda.powf(1.0 + g);
            let scale = lambda.powf(2.0 / (p - 1.0));
            let u = &rep.field;
            let shift = blowup_center(u, m);
            let mut coords = vec![0.0; params.dim()];
            let vals: Vec<f64> = (0..reference.node_count())
                .map(|i| {
                    let zt = reference.coords(i);
                    for k in 0..params.dim() {
                        coords[k] = if k < n { lambda * zt[k] } else { ly * zt[k] + shift[k - n] };
                    }
                    scale * u.interpolate_or_zero(&coords)
                })
                .collect();
            let field = Field::from_values(reference.clone(), vals)?;
            let origin = Point::origin(&params).coords();
            let value_at_origin = field.interpolate(&origin).unwrap_or(f64::NAN);
            let sup = field.sup().0;
            Ok(BlowupMember {
                lambda,
                max_value: m,
                center: Point::from_coords(&params, &[rep.sup_location.x.clone(), shift.clone()].concat()),
                field,
                sup,
                value_at_origin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlowupSequence { p, members })
}

/// `y` coordinates of the node used as the blow-up centre: among nodes within
/// a relative `1e-12` of the maximum `m`, the one closest to `{y = 0}`, then
/// the first in storage order. Symmetric solutions have mirrored ties.
fn blowup_center(u: &Field, m: f64) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.params().n();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (i, &v) in u.values().iter().enumerate() {
        if v < m * (1.0 - 1e-12) {
            continue;
        }
        let y = grid.coords(i).split_off(n);
        let r2: f64 = y.iter().map(|t| t * t).sum();
        // mirrored nodes differ in |y| only by rounding
        if best.as_ref().is_none_or(|(b, _)| r2 < *b * (1.0 - 1e-9)) {
            best = Some((r2, y));
        }
    }
    best.map(|(_, y)| y).unwrap_or_else(|| vec![0.0; grid.params().l()])
}

fn check_coefficient(h_q: f64) -> Result<()> {
    if h_q > 0.0 && h_q.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveCoefficient(h_q))
    }
}

/// `v'(x', y') = v(x'/√h, y'/√h^{1+γ})`. Maps solutions of
/// `-Δ_γ v = h v^p` to solutions of `-Δ_γ v' = v'^p`.
pub fn stretch_function(v: &ScalarFunction, h_q: f64, params: GrushinParams) -> Result<ScalarFunction> {
    check_coefficient(h_q)?;
    let v = v.clone();
    let inv = 1.0 / h_q.sqrt();
    Ok(ScalarFunction::new(move |z| v.eval(&params.dilate(inv, z))))
}

/// [`stretch_function`] applied to a field, resampled on the same grid with
/// multilinear interpolation and zero extension.
pub fn stretch_normalize(v: &Field, h_q: f64) -> Result<Field> {
    check_coefficient(h_q)?;
    if h_q == 1.0 {
        return Ok(v.clone());
    }
    let grid = v.grid();
    let params = *grid.params();
    let inv = 1.0 / h_q.sqrt();
    let vals = (0..grid.node_count())
        .map(|i| {
            let z = params.dilate(inv, &grid.point(i));
            v.interpolate_or_zero(&z.coords())
        })
        .collect();
    Field::from_values(grid.clone(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{barrier_value, BarrierSpec};

    fn p11() -> GrushinParams {
        GrushinParams::new(1, 1, 1.0).unwrap()
    }

    #[test]
    fn blowup_center_ignores_rounding_in_mirrored_ties() {
        let g = grid(8);
        let mut v = vec![0.0; g.node_count()];
        let (a, b) = (g.index(&[3, 3]), g.index(&[3, 4]));
        v[a] = 1.0;
        v[b] = 1.0;
        let u = Field::from_values(g.clone(), v).unwrap();
        assert_eq!(blowup_center(&u, 1.0), vec![g.coords(a)[1]]);
    }

    fn grid(nodes: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::grushin_box(p11(), 3.0, nodes).unwrap())
    }

    #[test]
    fn even_field_has_zero_deficit_at_zero() {
        let g = grid(33);
        let u = Field::from_fn(g.clone(), |z| (-z.x[0].powi(2) - z.y[0].abs()).exp() * (1.0 + z.x[0]));
        let rows = reflection_deficit(&u, &ReflectionSpec::new(0, vec![0.0])).unwrap();
        assert_eq!(rows[0].deficit, 0.0);
        assert_eq!(radial_y_deficit(&u), 0.0);
    }

    #[test]
    fn decreasing_profile_has_negative_deficits() {
        let g = grid(41);
        let p = p11();
        let u = Field::from_fn(g.clone(), |z| (-p.norm(z).powi(2)).exp());
        let spec = ReflectionSpec::snapped(&g, 0, 10, 0.0, 4.0).unwrap();
        for r in reflection_deficit(&u, &spec).unwrap() {
            assert!(r.lambda > 0.0);
            assert!(r.deficit < 0.0, "λ={} deficit={}", r.lambda, r.deficit);
        }
    }

    #[test]
    fn omega_is_antisymmetric_under_reflection() {
        let g = grid(21);
        let u = Field::from_fn(g.clone(), |z| (z.x[0] + 2.0 * z.y[0]).sin());
        let spec = ReflectionSpec::snapped(&g, 0, 4, 0.0, 3.0).unwrap();
        let k = 1;
        for &lam in &spec.lambdas {
            let w = omega_field(&u, 0, lam).unwrap();
            for i in 0..g.node_count() {
                let c = g.coords(i);
                let mut r = c.clone();
                r[k] = 2.0 * lam - c[k];
                if r[k] < g.lo()[k] || r[k] > g.hi()[k] {
                    continue;
                }
                let t = (r[k] - g.lo()[k]) / g.spacing(k);
                assert!((t - t.round()).abs() < 1e-9, "snapped plane must map nodes to nodes");
                let mut m = g.multi_index(i);
                m[k] = t.round() as usize;
                assert!((w.values()[g.index(&m)] + w.values()[i]).abs() < 1e-12);
            }
            // reflected field at -λ reproduces ω_λ at mirrored nodes
            let ur = Field::from_fn(g.clone(), |z| (z.x[0] - 2.0 * z.y[0]).sin());
            let wr = omega_field(&ur, 0, -lam).unwrap();
            for i in 0..g.node_count() {
                let mut m = g.multi_index(i);
                m[k] = g.dims()[k] - 1 - m[k];
                assert!((wr.values()[g.index(&m)] - w.values()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn plane_outside_grid() {
        let g = grid(9);
        let u = Field::zeros(g.clone());
        let bad = ReflectionSpec::new(0, vec![100.0]);
        assert!(matches!(reflection_deficit(&u, &bad), Err(Error::PlaneOutsideGrid { .. })));
        assert!(ReflectionSpec::snapped(&g, 1, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn radial_deficit_detects_odd_part() {
        let g = grid(17);
        let u = Field::from_fn(g, |z| 1.0 + 0.1 * z.y[0]);
        let hi = u.grid().hi()[1];
        assert!((radial_y_deficit(&u) - 0.2 * hi).abs() < 1e-12);
    }

    #[test]
    fn radial_deficit_in_two_y_dimensions() {
        let p = GrushinParams::new(1, 2, 1.0).unwrap();
        let g = Arc::new(GridSpec::cube(p, 2.0, 9).unwrap());
        let radial = Field::from_fn(g.clone(), |z| (z.x[0] - z.y_norm()).cos());
        assert!(radial_y_deficit(&radial) < 1e-14);
        let skew = Field::from_fn(g, |z| z.y[0] * z.y[0] - 0.5 * z.y[1] * z.y[1]);
        assert!(radial_y_deficit(&skew) > 0.1);
    }

    #[test]
    fn decay_fit_recovers_barrier_rate() {
        let p = p11();
        let g = Arc::new(GridSpec::grushin_box(p, 9.0, 81).unwrap());
        let spec = BarrierSpec::new(0.7, 1.3, 2.0).unwrap();
        let u = Field::from_fn(g, |z| barrier_value(z, &spec, &p));
        let fit = decay_fit(&u, 3.0, 6.0).unwrap();
        assert_eq!(fit.samples_used, DECAY_SHELLS);
        assert!((fit.a - 0.7).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.c - 1.3 * (-0.7f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn decay_fit_detects_power_law() {
        let p = p11();
        let g = Arc::new(GridSpec::grushin_box(p, 60.0, 121).unwrap());
        let u = Field::from_fn(g, |z| p.norm(z).max(1e-3).powf(-3.0));
        let fit = decay_fit(&u, 0.5, 40.0).unwrap();
        assert!(fit.r_squared < 0.95, "R² = {}", fit.r_squared);
        let fit = decay_fit_pointwise(&u, 0.5, 40.0).unwrap();
        assert!(fit.r_squared < 0.95, "R² = {}", fit.r_squared);
    }

    #[test]
    fn envelope_fit_ignores_direction_dependent_rates() {
        let p = p11();
        let g = Arc::new(GridSpec::grushin_box(p, 9.0, 121).unwrap());
        // slower decay along y = 0 than along x = 0
        let u = Field::from_fn(g, |z| {
            let d = p.norm(z);
            let s = if d > 0.0 { z.x[0].abs() / d } else { 0.0 };
            (-(2.0 - s.min(1.0)) * d).exp()
        });
        let env = decay_fit(&u, 3.0, 6.0).unwrap();
        assert!((env.a - 1.0).abs() < 0.05, "{env:?}");
        assert!(env.r_squared > 0.99);
        assert!(decay_fit_pointwise(&u, 3.0, 6.0).unwrap().r_squared < env.r_squared);
    }

    #[test]
    fn decay_fit_needs_tail() {
        let u = Field::zeros(grid(9));
        assert!(matches!(decay_fit(&u, 1.0, 2.0), Err(Error::InsufficientTail { .. })));
    }

    #[test]
    fn stretch_identity_and_group_law() {
        let p = p11();
        // composition error near the origin, second order in the spacing
        let err = |nodes| {
            let g = grid(nodes);
            let v = Field::from_fn(g.clone(), |z| (-p.norm(z).powi(4)).exp());
            assert_eq!(stretch_normalize(&v, 1.0).unwrap(), v);
            let back = stretch_normalize(&stretch_normalize(&v, 0.5).unwrap(), 2.0).unwrap();
            (0..g.node_count())
                .filter(|&i| p.norm(&g.point(i)) < 1.5)
                .map(|i| (back.values()[i] - v.values()[i]).abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(129), err(257));
        assert!(fine < 6e-3, "{fine}");
        assert!(coarse / fine > 3.0, "{coarse} / {fine}");
        let v = Field::zeros(grid(9));
        assert!(matches!(stretch_normalize(&v, 0.0), Err(Error::NonpositiveCoefficient(_))));
    }
}
