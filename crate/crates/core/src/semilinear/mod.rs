//! Damped Newton for the semilinear Dirichlet problems
//! `-Δ_γ u + c u = f(z, u)` on boxes, and sweeps over exponents, box sizes
//! and families of nonlinearities.

mod newton;
mod nonlinearity;
mod sweeps;

pub use newton::{
    default_initial_guess, dilate_solution, inscribed_ball, nehari_initial_guess, nehari_project, scaled_default_guess, residual_field, solve_dirichlet,
    solve_with_operator, ReportSummary, SolveConfig, SolveReport, TRIVIAL_THRESHOLD,
};
pub use nonlinearity::{BoundNonlinearity, Nonlinearity, NonlinearityKind, Source};
pub use sweeps::{apriori_sweep, box_size_sweep, continuation_in_p, write_apriori_csv, AprioriRow};
