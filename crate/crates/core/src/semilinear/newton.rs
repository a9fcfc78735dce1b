use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discrete::krylov::{self, KrylovOutcome};
use crate::discrete::{DiscreteOperator, Field, GridSpec};
use crate::geometry::Point;
use crate::semilinear::{BoundNonlinearity, Nonlinearity, NonlinearityKind};
use crate::{Error, Result};

/// Converged solutions with a smaller maximum count as the zero solution.
pub const TRIVIAL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Sup-norm of the discrete residual at convergence.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Relative tolerance of the inner MINRES solve.
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Smallest damping factor tried by the halving line search.
    pub min_step: f64,
    pub positivity_projection: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-9,
            newton_max: 60,
            cg_tol: 1e-11,
            cg_max: 50_000,
            min_step: 1.0 / 64.0,
            positivity_projection: true,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.cg_tol > 0.0 && self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::InvalidParams(
                "solver tolerances must be positive and min_step in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: Field,
    /// Sup-norm residual before each step and after the last one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub sup_value: f64,
    pub sup_node: usize,
    pub sup_location: Point,
    pub p: f64,
}

/// Scalars of a [`SolveReport`] for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub converged: bool,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub sup_value: f64,
    pub sup_location: Point,
    pub p: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            converged: self.converged,
            newton_iterations: self.newton_iterations,
            linear_iterations: self.linear_iterations,
            final_residual: self.final_residual(),
            residual_history: self.residual_history.clone(),
            sup_value: self.sup_value,
            sup_location: self.sup_location.clone(),
            p: self.p,
        }
    }
}

/// Anisotropic bump `2 exp(-(|x|² + |y|^{2/(1+γ)}))`, zero on the boundary.
pub fn default_initial_guess(grid: &Arc<GridSpec>) -> Field {
    let g = grid.params().gamma();
    Field::from_fn_dirichlet(grid.clone(), |z| {
        let x2: f64 = z.x.iter().map(|v| v * v).sum();
        2.0 * (-(x2 + z.y_norm().powf(2.0 / (1.0 + g)))).exp()
    })
}

/// Centre of the box and radius of the largest Grushin ball around it that
/// fits inside. For [`GridSpec::grushin_box`] this is the origin and `R`.
pub fn inscribed_ball(grid: &GridSpec) -> (Point, f64) {
    let params = grid.params();
    let g = params.gamma();
    let n = params.n();
    let mid: Vec<f64> = grid.lo().iter().zip(grid.hi()).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut radius = f64::INFINITY;
    for k in 0..grid.ndim() {
        let half = 0.5 * (grid.hi()[k] - grid.lo()[k]);
        let r = if k < n {
            half / (1.0 + g).powf(1.0 / (1.0 + g))
        } else {
            half.powf(1.0 / (1.0 + g))
        };
        radius = radius.min(r);
    }
    (Point::from_coords(params, &mid), radius)
}

/// Relative width of the Gaussian used by [`nehari_initial_guess`].
pub const NEHARI_WIDTH: f64 = 1.0 / 3.0;

/// Gaussian `exp(-(d(z, c) / w)²)` about the box centre `c` with
/// `w = R_in / 3`, projected onto the Nehari set of a power nonlinearity:
/// `φ ↦ tφ` with `t^{p-1} = (⟨Aφ, φ⟩ + c⟨φ, φ⟩) / ⟨h φ^{p+1}⟩`.
///
/// The width follows the box, so guesses on dilated boxes are dilates of one
/// another.
pub fn nehari_initial_guess(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
) -> Result<Field> {
    let grid = op.grid();
    let params = *grid.params();
    let (centre, radius) = inscribed_ball(grid);
    let w = NEHARI_WIDTH * radius;
    let shape = Field::from_fn_dirichlet(grid.clone(), |z| {
        (-(params.distance(z, &centre) / w).powi(2)).exp()
    });
    nehari_project(op, nl, shape)
}

/// [`default_initial_guess`] rescaled onto the Nehari set of `nl`. Used for
/// ground states, which are much narrower than their boxes.
pub fn scaled_default_guess(op: &DiscreteOperator, nl: &Nonlinearity) -> Result<Field> {
    nehari_project(op, nl, default_initial_guess(op.grid()))
}

/// Rescales a nonnegative `shape` onto the Nehari set of a power
/// nonlinearity. Other kinds are returned unchanged.
pub fn nehari_project(op: &DiscreteOperator, nl: &Nonlinearity, shape: Field) -> Result<Field> {
    let grid = op.grid();
    if !shape.same_grid(grid) {
        return Err(Error::GridMismatch);
    }
    if nl.kind() != NonlinearityKind::Power {
        return Ok(shape);
    }
    let h = nl.coefficient().sample(grid)?;
    let phi = op.restrict(&shape)?;
    let mut aphi = vec![0.0; phi.len()];
    op.matvec(&phi, &mut aphi);
    let quad = krylov::dot(&aphi, &phi) + nl.linear_term() * krylov::dot(&phi, &phi);
    let pot: f64 = op
        .interior_nodes()
        .iter()
        .zip(&phi)
        .map(|(&n, &v)| h[n] * v.max(0.0).powf(nl.p() + 1.0))
        .sum();
    if !(quad > 0.0 && pot > 0.0) {
        return Err(Error::InvalidParams("shape has no Nehari rescaling".into()));
    }
    let t = (quad / pot).powf(1.0 / (nl.p() - 1.0));
    let mut out = shape;
    out.values_mut().iter_mut().for_each(|v| *v *= t);
    Ok(out)
}

/// `-Δ_γ u + c u - f(z, u)` on interior nodes, zero on the boundary. Evaluated
/// with a fresh operator pass, independent of the Newton internals.
pub fn residual_field(op: &DiscreteOperator, nl: &Nonlinearity, u: &Field) -> Result<Field> {
    let bound = nl.bind(op.grid())?;
    let mut r = op.apply(u)?;
    let vals = u.values();
    let c = bound.linear_term();
    let out = r.values_mut();
    for &n in op.interior_nodes() {
        out[n] += c * vals[n] - bound.eval(n, vals[n]).0;
    }
    Ok(r)
}

struct NewtonState<'a> {
    op: &'a DiscreteOperator,
    nl: BoundNonlinearity,
}

impl NewtonState<'_> {
    fn residual(&self, x: &[f64], out: &mut [f64]) {
        self.op.matvec(x, out);
        let c = self.nl.linear_term();
        for ((ri, &xi), &node) in out.iter_mut().zip(x).zip(self.op.interior_nodes()) {
            *ri += c * xi - self.nl.eval(node, xi).0;
        }
    }

    fn jacobian_shift(&self, x: &[f64]) -> Vec<f64> {
        let c = self.nl.linear_term();
        x.iter()
            .zip(self.op.interior_nodes())
            .map(|(&xi, &node)| c - self.nl.eval(node, xi).1)
            .collect()
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton for `-Δ_γ u + c u = f(z, u)` with `u = 0` on the boundary.
///
/// Each step solves the symmetric (generally indefinite) Jacobian system with
/// Jacobi-preconditioned MINRES, then halves the step until the Euclidean residual
/// norm decreases sufficiently. If even `cfg.min_step` fails to decrease it,
/// the solve stops with [`Error::NewtonDiverged`].
pub fn solve_dirichlet(
    grid: &Arc<GridSpec>,
    nl: &Nonlinearity,
    init: &Field,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    let op = DiscreteOperator::assemble(grid)?;
    solve_with_operator(&op, nl, init, cfg)
}

pub fn solve_with_operator(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    init: &Field,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = op.grid();
    if !init.same_grid(grid) {
        return Err(Error::GridMismatch);
    }
    if (0..grid.node_count()).any(|i| grid.is_boundary(i) && init.values()[i] != 0.0) {
        return Err(Error::InvalidParams(
            "initial guess must vanish on the boundary".into(),
        ));
    }
    let state = NewtonState { op, nl: nl.bind(grid)? };
    let diag_a = op.diagonal();
    let n = op.size();

    let mut x = op.restrict(init)?;
    if cfg.positivity_projection {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let mut r = vec![0.0; n];
    state.residual(&x, &mut r);
    let mut rnorm = sup_norm(&r);
    let mut merit_old = l2_norm(&r);
    let mut history = vec![rnorm];
    let mut linear_iterations = 0;
    let mut newton_iterations = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];

    while rnorm > cfg.newton_tol {
        if newton_iterations == cfg.newton_max || !rnorm.is_finite() {
            return Err(Error::NewtonDiverged { history, p: nl.p() });
        }
        newton_iterations += 1;
        let shift = state.jacobian_shift(&x);
        let inv_diag: Vec<f64> = diag_a
            .iter()
            .zip(&shift)
            .map(|(d, s)| 1.0 / (d + s.abs()))
            .collect();
        let jac = |v: &[f64], out: &mut [f64]| {
            op.matvec(v, out);
            for ((o, vi), s) in out.iter_mut().zip(v).zip(&shift) {
                *o += s * vi;
            }
        };
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let KrylovOutcome { x: delta, iterations, .. } =
            match krylov::minres(jac, Some(&inv_diag), &rhs, vec![0.0; n], cfg.cg_tol, cfg.cg_max) {
                Ok(out) => out,
                Err(Error::MaxIterationsExceeded { .. }) => {
                    return Err(Error::NewtonDiverged { history, p: nl.p() })
                }
                Err(e) => return Err(e),
            };
        linear_iterations += iterations;

        let mut t = 1.0;
        loop {
            for ((ti, xi), di) in trial.iter_mut().zip(&x).zip(&delta) {
                *ti = xi + t * di;
                if cfg.positivity_projection && *ti < 0.0 {
                    *ti = 0.0;
                }
            }
            state.residual(&trial, &mut r_trial);
            let merit = l2_norm(&r_trial);
            if merit <= (1.0 - 1e-4 * t) * merit_old || (t <= cfg.min_step && merit < merit_old) {
                merit_old = merit;
                rnorm = sup_norm(&r_trial);
                break;
            }
            if t <= cfg.min_step {
                history.push(sup_norm(&r_trial));
                return Err(Error::NewtonDiverged { history, p: nl.p() });
            }
            t *= 0.5;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut r, &mut r_trial);
        history.push(rnorm);
    }

    let field = op.prolong(&x);
    let (sup_value, sup_node) = field.sup();
    let report = SolveReport {
        sup_location: grid.point(sup_node),
        field,
        residual_history: history,
        converged: true,
        newton_iterations,
        linear_iterations,
        sup_value,
        sup_node,
        p: nl.p(),
    };
    if sup_value < TRIVIAL_THRESHOLD {
        return Err(Error::TrivialCollapse(Box::new(report)));
    }
    Ok(report)
}

/// `u_λ(z) = λ^{2/(p-1)} u(δ_λ z)` on the grid `δ_{1/λ}` of `u`'s grid.
/// Nodes correspond one-to-one, so no interpolation is involved.
pub fn dilate_solution(u: &Field, lambda: f64, p: f64) -> Result<Field> {
    if !(lambda > 0.0) || !(p > 1.0) {
        return Err(Error::InvalidParams(format!(
            "dilation needs λ > 0 and p > 1 (got λ={lambda}, p={p})"
        )));
    }
    let grid = Arc::new(u.grid().dilated_domain(lambda)?);
    let s = lambda.powf(2.0 / (p - 1.0));
    Field::from_values(grid, u.values().iter().map(|v| s * v).collect())
}
