use std::fmt;
use std::sync::Arc;

use crate::closed_form::ScalarFunction;
use crate::discrete::GridSpec;
use crate::geometry::Point;
use crate::{Error, Result};

type GeneralFn = dyn Fn(&Point, f64) -> (f64, f64) + Send + Sync;

/// Spatial data for a nonlinearity: a constant, a point function, or nodal
/// values bound to one grid.
#[derive(Clone)]
pub enum Source {
    Constant(f64),
    Function(ScalarFunction),
    Nodal(Arc<[f64]>),
}

impl Source {
    /// Values at every node of `grid`.
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let n = grid.node_count();
        match self {
            Source::Constant(c) => Ok(vec![*c; n]),
            Source::Function(f) => Ok((0..n).map(|i| f.eval(&grid.point(i))).collect()),
            Source::Nodal(v) if v.len() == n => Ok(v.to_vec()),
            Source::Nodal(_) => Err(Error::GridMismatch),
        }
    }

    fn scaled(&self, s: f64) -> Source {
        match self {
            Source::Constant(c) => Source::Constant(c * s),
            Source::Function(f) => {
                let f = f.clone();
                Source::Function(ScalarFunction::new(move |z| s * f.eval(z)))
            }
            Source::Nodal(v) => Source::Nodal(v.iter().map(|x| x * s).collect()),
        }
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(c) => write!(f, "Constant({c})"),
            Source::Function(_) => write!(f, "Function"),
            Source::Nodal(v) => write!(f, "Nodal(len={})", v.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearityKind {
    /// `f(z, u) = h(z) u₊^p + g(z)`
    Power,
    /// User-supplied `(z, u) ↦ (f, ∂f/∂u)`.
    General,
}

/// Right-hand side of `-Δ_γ u + c u = f(z, u)` where `c = linear_term`.
#[derive(Clone)]
pub struct Nonlinearity {
    p: f64,
    coefficient: Source,
    forcing: Source,
    linear_term: f64,
    general: Option<Arc<GeneralFn>>,
}

impl Nonlinearity {
    /// `f = u^p` with no linear term: the Dirichlet power problem.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("exponent must exceed 1 (got {p})")));
        }
        Ok(Self {
            p,
            coefficient: Source::Constant(1.0),
            forcing: Source::Constant(0.0),
            linear_term: 0.0,
            general: None,
        })
    }

    /// `-Δ_γ u + u = u^p`.
    pub fn ground_state(p: f64) -> Result<Self> {
        Ok(Self::power(p)?.with_linear_term(1.0))
    }

    /// Arbitrary `f` with its `u`-derivative; `p` is recorded as the growth
    /// exponent used by rescaling diagnostics.
    pub fn general(
        p: f64,
        f: impl Fn(&Point, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            p,
            coefficient: Source::Constant(1.0),
            forcing: Source::Constant(0.0),
            linear_term: 0.0,
            general: Some(Arc::new(f)),
        }
    }

    pub fn with_coefficient(mut self, h: Source) -> Self {
        self.coefficient = h;
        self
    }

    pub fn with_forcing(mut self, g: Source) -> Self {
        self.forcing = g;
        self
    }

    pub fn with_linear_term(mut self, c: f64) -> Self {
        self.linear_term = c;
        self
    }

    /// Same data with exponent `p`.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("exponent must exceed 1 (got {p})")));
        }
        let mut out = self.clone();
        out.p = p;
        Ok(out)
    }

    /// Forcing multiplied by `s`.
    pub fn with_scaled_forcing(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.forcing = self.forcing.scaled(s);
        out
    }

    pub fn kind(&self) -> NonlinearityKind {
        if self.general.is_some() {
            NonlinearityKind::General
        } else {
            NonlinearityKind::Power
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn linear_term(&self) -> f64 {
        self.linear_term
    }

    pub fn coefficient(&self) -> &Source {
        &self.coefficient
    }

    pub fn forcing(&self) -> &Source {
        &self.forcing
    }

    /// Samples spatial data on `grid` and checks `h > 0`.
    pub fn bind(&self, grid: &GridSpec) -> Result<BoundNonlinearity> {
        let n = grid.node_count();
        let (h, g, points) = match &self.general {
            None => {
                let h = self.coefficient.sample(grid)?;
                if let Some(bad) = h.iter().find(|v| !(**v > 0.0)) {
                    return Err(Error::InvalidParams(format!(
                        "coefficient h must be strictly positive (found {bad})"
                    )));
                }
                (h, self.forcing.sample(grid)?, Vec::new())
            }
            Some(_) => (Vec::new(), Vec::new(), (0..n).map(|i| grid.point(i)).collect()),
        };
        Ok(BoundNonlinearity {
            p: self.p,
            h,
            g,
            points,
            linear_term: self.linear_term,
            general: self.general.clone(),
        })
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind())
            .field("p", &self.p)
            .field("coefficient", &self.coefficient)
            .field("forcing", &self.forcing)
            .field("linear_term", &self.linear_term)
            .finish()
    }
}

/// A [`Nonlinearity`] evaluated against a specific grid.
pub struct BoundNonlinearity {
    p: f64,
    h: Vec<f64>,
    g: Vec<f64>,
    points: Vec<Point>,
    linear_term: f64,
    general: Option<Arc<GeneralFn>>,
}

impl BoundNonlinearity {
    pub fn linear_term(&self) -> f64 {
        self.linear_term
    }

    /// `(f, ∂f/∂u)` at grid node `node`. Power terms clamp `u` at zero.
    pub fn eval(&self, node: usize, u: f64) -> (f64, f64) {
        match &self.general {
            Some(f) => f(&self.points[node], u),
            None => {
                let up = u.max(0.0);
                let h = self.h[node];
                let pm1 = up.powf(self.p - 1.0);
                (h * pm1 * up + self.g[node], self.p * h * pm1)
            }
        }
    }
}
