//! Numerical toolkit for the Grushin operator
//! `Δ_γ = Δ_x + |x|^{2γ} Δ_y` on `R^{N+l}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: parameters, quasi-distance, dilations, Kelvin inversion.
//! * [`closed_form`]: barrier and power functions with their exact Grushin
//!   Laplacians, plus the central-difference oracle used to check them.
//! * [`kelvin`]: the Kelvin transform on functions and its conjugation identity.
//! * [`discrete`]: tensor grids, nodal fields, the assembled `-Δ_γ` matrix and
//!   Krylov solvers.
//! * [`semilinear`]: damped Newton for `-Δ_γ u + c u = f(z, u)` with sweeps.
//! * [`diagnostics`]: moving-plane deficits, decay fits, blow-up rescaling.
//! * [`io`], [`config`], [`experiment`]: file formats and the experiment runner
//!   behind the `grushin-lab` binary.

pub mod checks;
pub mod closed_form;
pub mod config;
pub mod diagnostics;
pub mod discrete;
mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod kelvin;
pub mod rng;
pub mod semilinear;

pub use closed_form::{BarrierSpec, ScalarFunction};
pub use discrete::{DiscreteOperator, Field, GridSpec};
pub use error::{Error, Result};
pub use geometry::{CriticalExponents, GrushinParams, Point};
pub use semilinear::{Nonlinearity, SolveConfig, SolveReport};
