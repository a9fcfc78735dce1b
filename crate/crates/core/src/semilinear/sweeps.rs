use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::{DiscreteOperator, Field, GridSpec};
use crate::geometry::{GrushinParams, Point};
use crate::io::fmt_f64;
use crate::semilinear::{
    nehari_initial_guess, nehari_project, solve_with_operator, Nonlinearity, SolveConfig,
    SolveReport,
};
use crate::{Error, Result};

/// Solves at `steps` equally spaced exponents from `p_start` to `p_end`,
/// starting from [`nehari_initial_guess`] and warm-starting each step from
/// the previous solution projected onto the next Nehari set.
pub fn continuation_in_p(
    grid: &Arc<GridSpec>,
    template: &Nonlinearity,
    p_start: f64,
    p_end: f64,
    steps: usize,
    cfg: &SolveConfig,
) -> Result<Vec<SolveReport>> {
    if steps < 2 {
        return Err(Error::InvalidParams("continuation needs at least 2 steps".into()));
    }
    let op = DiscreteOperator::assemble(grid)?;
    let mut current: Option<Field> = None;
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let p = p_start + (p_end - p_start) * k as f64 / (steps - 1) as f64;
        let nl = template.with_exponent(p)?;
        let init = match current.take() {
            None => nehari_initial_guess(&op, &nl)?,
            Some(prev) => nehari_project(&op, &nl, prev)?,
        };
        let rep = solve_with_operator(&op, &nl, &init, cfg).map_err(|e| match e {
            Error::NewtonDiverged { history, .. } => Error::NewtonDiverged { history, p },
            other => other,
        })?;
        current = Some(rep.field.clone());
        out.push(rep);
    }
    Ok(out)
}

/// Dirichlet solves on [`GridSpec::grushin_box`] of each radius with a fixed
/// node count, each cold-started from [`nehari_initial_guess`]. Radii are
/// solved concurrently; results keep the input order.
pub fn box_size_sweep(
    params: GrushinParams,
    radii: &[f64],
    nodes: usize,
    nl: &Nonlinearity,
    cfg: &SolveConfig,
) -> Result<Vec<SolveReport>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("radii must be strictly increasing".into()));
    }
    radii
        .par_iter()
        .map(|&r| {
            let grid = Arc::new(GridSpec::grushin_box(params, r, nodes)?);
            let op = DiscreteOperator::assemble(&grid)?;
            let init = nehari_initial_guess(&op, nl)?;
            solve_with_operator(&op, nl, &init, cfg)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriRow {
    pub member: usize,
    pub p: f64,
    pub sup_value: f64,
    pub sup_location: Point,
    /// `|x|` at the maximiser.
    pub x_offset: f64,
    pub on_degeneracy_line: bool,
    pub newton_iterations: usize,
    pub final_residual: f64,
}

/// Exponent from which [`apriori_sweep`] continues towards larger `p`.
pub const CONTINUATION_START: f64 = 3.0;
/// Largest exponent increment per continuation step.
pub const CONTINUATION_STEP: f64 = 0.25;

/// Solves every member of a family on one grid and tabulates the maxima.
///
/// Members start from the solution of `-Δ_γ u = u^p` at their own `p`,
/// reached by continuation from [`CONTINUATION_START`] and projected onto the
/// member's Nehari set.
///
/// Each member must satisfy `1 + 4/N_γ ≤ p ≤ (N_γ+2)/(N_γ-2)` and have a
/// strictly positive coefficient.
pub fn apriori_sweep(
    grid: &Arc<GridSpec>,
    family: &[Nonlinearity],
    cfg: &SolveConfig,
) -> Result<Vec<AprioriRow>> {
    let exps = grid.params().critical_exponents()?;
    for (i, nl) in family.iter().enumerate() {
        let p = nl.p();
        if p < exps.halfspace_lower - 1e-12 || p > exps.serrin_upper + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "member {i}: p = {p} outside [{}, {}]",
                exps.halfspace_lower, exps.serrin_upper
            )));
        }
        nl.bind(grid)?;
    }
    let op = DiscreteOperator::assemble(grid)?;
    let tol = 1e-12 * grid.spacing(0);
    let mut exponents: Vec<f64> = family.iter().map(Nonlinearity::p).collect();
    exponents.sort_by(f64::total_cmp);
    exponents.dedup();
    let shapes = exponents
        .par_iter()
        .map(|&p| power_solution(grid, p, cfg).map(|f| (p.to_bits(), f)))
        .collect::<Result<std::collections::HashMap<u64, Field>>>()?;
    family
        .par_iter()
        .enumerate()
        .map(|(member, nl)| {
            let init = nehari_project(&op, nl, shapes[&nl.p().to_bits()].clone())?;
            let rep = solve_with_operator(&op, nl, &init, cfg)?;
            let x_offset = rep.sup_location.x_norm();
            Ok(AprioriRow {
                member,
                p: nl.p(),
                sup_value: rep.sup_value,
                sup_location: rep.sup_location.clone(),
                x_offset,
                on_degeneracy_line: x_offset <= tol,
                newton_iterations: rep.newton_iterations,
                final_residual: rep.final_residual(),
            })
        })
        .collect()
}

fn power_solution(grid: &Arc<GridSpec>, p: f64, cfg: &SolveConfig) -> Result<Field> {
    let unit = Nonlinearity::power(CONTINUATION_START)?;
    let reports = if p <= CONTINUATION_START {
        let op = DiscreteOperator::assemble(grid)?;
        let nl = unit.with_exponent(p)?;
        vec![solve_with_operator(&op, &nl, &nehari_initial_guess(&op, &nl)?, cfg)?]
    } else {
        let steps = ((p - CONTINUATION_START) / CONTINUATION_STEP).ceil() as usize + 1;
        continuation_in_p(grid, &unit, CONTINUATION_START, p, steps, cfg)?
    };
    Ok(reports.into_iter().last().expect("at least one step").field)
}

pub fn write_apriori_csv<W: Write>(rows: &[AprioriRow], mut out: W) -> Result<()> {
    let Some(first) = rows.first() else {
        writeln!(out, "member,p,sup,x_offset,on_degeneracy_line")?;
        return Ok(());
    };
    let mut header = vec!["member".to_string(), "p".into(), "sup".into()];
    header.extend((1..=first.sup_location.x.len()).map(|i| format!("sup_x{i}")));
    header.extend((1..=first.sup_location.y.len()).map(|j| format!("sup_y{j}")));
    header.extend(["x_offset", "on_degeneracy_line", "newton_iterations", "final_residual"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let mut row = vec![r.member.to_string(), fmt_f64(r.p), fmt_f64(r.sup_value)];
        row.extend(r.sup_location.coords().into_iter().map(fmt_f64));
        row.push(fmt_f64(r.x_offset));
        row.push(r.on_degeneracy_line.to_string());
        row.push(r.newton_iterations.to_string());
        row.push(fmt_f64(r.final_residual));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
