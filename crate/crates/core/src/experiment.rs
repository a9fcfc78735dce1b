//! Configured experiments: config resolution, execution and artifact output.
//!
//! Every run writes `summary.json` (which embeds the resolved configuration)
//! plus problem-specific CSV tables and field files into `output_dir`. All
//! outputs are deterministic for a given configuration and seed.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{
    barrier_identity, identity_barrier, identity_power_exponents, kelvin_check, kelvin_region, power_identity,
    sample_points, write_identity_csv, SamplingRegion,
};
use crate::closed_form::{ScalarFunction, DEFAULT_FD_STEP};
use crate::config::FlatConfig;
use crate::diagnostics::{
    blowup_rescale, decay_fit, radial_y_deficit, reflection_deficit, write_decay_csv, write_deficit_csv, DecayFit,
    DeficitPoint, ReflectionSpec,
};
use crate::discrete::{discrete_h1_gamma_norm, DiscreteOperator, Field, GridSpec};
use crate::geometry::GrushinParams;
use crate::io::{create_csv, fmt_f64, load_field, save_field, write_json};
use crate::rng::SplitMix64;
use crate::semilinear::{
    apriori_sweep, box_size_sweep, dilate_solution, nehari_initial_guess, residual_field, scaled_default_guess, solve_with_operator,
    write_apriori_csv, Nonlinearity, SolveConfig, SolveReport, Source,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    GroundState,
    DirichletPower,
    Halfspace,
    AprioriSweep,
    ScalingSweep,
    Identities,
    MovingPlane,
    KelvinVerify,
}

impl Problem {
    pub const ALL: [Problem; 8] = [
        Problem::GroundState,
        Problem::DirichletPower,
        Problem::Halfspace,
        Problem::AprioriSweep,
        Problem::ScalingSweep,
        Problem::Identities,
        Problem::MovingPlane,
        Problem::KelvinVerify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Problem::GroundState => "ground_state",
            Problem::DirichletPower => "dirichlet_power",
            Problem::Halfspace => "halfspace",
            Problem::AprioriSweep => "apriori_sweep",
            Problem::ScalingSweep => "scaling_sweep",
            Problem::Identities => "identities",
            Problem::MovingPlane => "moving_plane",
            Problem::KelvinVerify => "kelvin_verify",
        }
    }

    fn solves(self) -> bool {
        !matches!(self, Problem::Identities | Problem::KelvinVerify)
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown problem '{s}'")))
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "problem",
    "N",
    "l",
    "gamma",
    "radius",
    "nodes",
    "p",
    "linear_term",
    "radii",
    "members",
    "lambda_count",
    "samples",
    "fd_step",
    "seed",
    "newton_tol",
    "newton_max",
    "cg_tol",
    "cg_max",
    "min_step",
    "positivity_projection",
    "output_dir",
];

pub const DEFAULT_SEED: u64 = 1234567;

/// Fully resolved experiment settings.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    #[serde(rename = "N")]
    pub n: usize,
    pub l: usize,
    pub gamma: f64,
    /// Grushin radius of the box (see [`GridSpec::grushin_box`]).
    pub radius: f64,
    /// Nodes per axis.
    pub nodes: usize,
    pub p: f64,
    /// `c` in `-Δ_γ u + c u = f`.
    pub linear_term: f64,
    pub radii: Vec<f64>,
    pub members: usize,
    pub lambda_count: usize,
    pub samples: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub solver: SolveConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<GrushinParams> {
        GrushinParams::new(self.n, self.l, self.gamma)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_flat(&FlatConfig::load(path)?)
    }

    /// Resolves defaults, which depend on the problem and dimension.
    pub fn from_flat(c: &FlatConfig) -> Result<Self> {
        let unknown = c.unknown_keys(KNOWN_KEYS);
        if !unknown.is_empty() {
            return Err(Error::InvalidParams(format!("unknown keys: {}", unknown.join(", "))));
        }
        let problem: Problem = c.require::<String>("problem")?.parse()?;
        let n: usize = c.require("N")?;
        let l: usize = c.require("l")?;
        let gamma: f64 = c.require("gamma")?;
        let params = GrushinParams::new(n, l, gamma)?;
        let exps = params.critical_exponents()?;

        let (radius, nodes, linear_term) = match (problem, params.dim()) {
            (Problem::GroundState | Problem::MovingPlane, _) => {
                let (r, n) = ground_state_box(params);
                (r, n, 1.0)
            }
            (_, 2) => (4.0, 128, 0.0),
            _ => (4.0, 48, 0.0),
        };
        let p = match problem {
            Problem::AprioriSweep => 0.5 * (exps.halfspace_lower + exps.serrin_upper).min(8.0),
            _ => default_exponent(params)?,
        };
        let p = if problem == Problem::AprioriSweep && (exps.halfspace_lower..=exps.serrin_upper).contains(&4.0) {
            4.0
        } else {
            p
        };
        let d = SolveConfig::default();
        let solver = SolveConfig {
            newton_tol: c.get_or("newton_tol", d.newton_tol)?,
            newton_max: c.get_or("newton_max", d.newton_max)?,
            cg_tol: c.get_or("cg_tol", d.cg_tol)?,
            cg_max: c.get_or("cg_max", d.cg_max)?,
            min_step: c.get_or("min_step", d.min_step)?,
            positivity_projection: c.get_or("positivity_projection", d.positivity_projection)?,
        };
        solver.validate()?;
        let cfg = Self {
            problem,
            n,
            l,
            gamma,
            radius: c.get_or("radius", radius)?,
            nodes: c.get_or("nodes", nodes)?,
            p: c.get_or("p", p)?,
            linear_term: c.get_or("linear_term", linear_term)?,
            radii: c.list_or("radii", vec![4.0, 8.0, 16.0])?,
            members: c.get_or("members", 10)?,
            lambda_count: c.get_or("lambda_count", 20)?,
            samples: c.get_or("samples", 100)?,
            fd_step: c.get_or("fd_step", DEFAULT_FD_STEP)?,
            seed: c.get_or("seed", DEFAULT_SEED)?,
            solver,
            output_dir: PathBuf::from(c.get_or("output_dir", "out".to_string())?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.radius > 0.0) {
            return bad(format!("radius must be positive (got {})", self.radius));
        }
        if !(self.p > 1.0) {
            return bad(format!("p must exceed 1 (got {})", self.p));
        }
        if !(self.fd_step > 0.0) {
            return bad(format!("fd_step must be positive (got {})", self.fd_step));
        }
        if self.radii.is_empty() || self.radii.windows(2).any(|w| w[1] <= w[0]) || self.radii[0] <= 0.0 {
            return bad("radii must be positive and strictly increasing".into());
        }
        if self.samples == 0 || self.members == 0 || self.lambda_count == 0 {
            return bad("samples, members and lambda_count must be positive".into());
        }
        Ok(())
    }
}

/// Result of [`run`]: the JSON summary and whether every built-in check of
/// the experiment passed.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: Value,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn field(&mut self, name: &str, f: &Field) -> Result<()> {
        let p = self.path(name);
        save_field(f, p)
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut dyn std::io::Write) -> Result<()>) -> Result<()> {
        let mut out = create_csv(self.path(name))?;
        write(&mut out)?;
        std::io::Write::flush(&mut out)?;
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut art = Artifacts { dir: cfg.output_dir.clone(), files: Vec::new() };
    let params = cfg.params()?;
    let (results, passed) = match cfg.problem {
        Problem::GroundState | Problem::MovingPlane => run_ground_state(cfg, params, &mut art)?,
        Problem::DirichletPower => run_dirichlet(cfg, params, false, &mut art)?,
        Problem::Halfspace => run_dirichlet(cfg, params, true, &mut art)?,
        Problem::AprioriSweep => run_apriori(cfg, params, &mut art)?,
        Problem::ScalingSweep => run_scaling(cfg, params, &mut art)?,
        Problem::Identities => run_identities(cfg, params, &mut art)?,
        Problem::KelvinVerify => run_kelvin(cfg, params, &mut art)?,
    };
    let summary = json!({
        "problem": cfg.problem,
        "config": cfg,
        "passed": passed,
        "results": results,
    });
    write_json(&summary, art.path("summary.json"))?;
    Ok(ExperimentOutcome { summary, passed, files: art.files })
}

pub fn run_file(path: impl AsRef<Path>) -> Result<ExperimentOutcome> {
    run(&ExperimentConfig::from_file(path)?)
}

fn write_history(art: &mut Artifacts, name: &str, rep: &SolveReport) -> Result<()> {
    art.csv(name, |out| {
        writeln!(out, "iteration,residual_sup")?;
        for (i, r) in rep.residual_history.iter().enumerate() {
            writeln!(out, "{i},{}", fmt_f64(*r))?;
        }
        Ok(())
    })
}

fn nonlinearity(cfg: &ExperimentConfig) -> Result<Nonlinearity> {
    Ok(Nonlinearity::power(cfg.p)?.with_linear_term(cfg.linear_term))
}

fn solve_nehari(grid: &Arc<GridSpec>, nl: &Nonlinearity, cfg: &SolveConfig) -> Result<SolveReport> {
    let op = DiscreteOperator::assemble(grid)?;
    let init = nehari_initial_guess(&op, nl)?;
    solve_with_operator(&op, nl, &init, cfg)
}

/// Tolerance for symmetry deficits of converged ground states.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Smallest acceptable `R²` of the tail fit.
pub const DECAY_R2_MIN: f64 = 0.98;

/// Symmetry and decay diagnostics of a ground state on a box of radius `R`:
/// planes over `(0, y_max/2]` for every `y` axis, and the tail fit on
/// `(R/3, 2R/3)`.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateDiagnostics {
    pub evenness_deficit: f64,
    pub radial_y_deficit: f64,
    pub max_plane_deficit: f64,
    pub deficits: Vec<(usize, Vec<DeficitPoint>)>,
    pub decay: Option<DecayFit>,
    pub x_offset_of_max: f64,
    pub h1_gamma_norm: f64,
}

pub fn ground_state_diagnostics(rep: &SolveReport, radius: f64, lambda_count: usize) -> Result<GroundStateDiagnostics> {
    let u = &rep.field;
    let grid = u.grid();
    let params = grid.params();
    let mut deficits = Vec::new();
    let mut evenness: f64 = 0.0;
    let mut max_plane = f64::NEG_INFINITY;
    for axis in 0..params.l() {
        let k = params.n() + axis;
        let mid = 0.5 * (grid.lo()[k] + grid.hi()[k]);
        let half = 0.5 * (grid.hi()[k] - grid.lo()[k]);
        let even = reflection_deficit(u, &ReflectionSpec::new(axis, vec![mid]))?;
        // |u(x, y) - u(x, -y)| is the larger of the two one-sided deficits
        let mirrored = omega_sup_abs(u, axis, mid)?;
        evenness = evenness.max(mirrored).max(even[0].deficit);
        let spec = ReflectionSpec::snapped(grid, axis, lambda_count, mid, mid + 0.5 * half)?;
        let rows = reflection_deficit(u, &spec)?;
        max_plane = rows.iter().map(|r| r.deficit).fold(max_plane, f64::max);
        deficits.push((axis, rows));
    }
    Ok(GroundStateDiagnostics {
        evenness_deficit: evenness,
        radial_y_deficit: radial_y_deficit(u),
        max_plane_deficit: max_plane,
        deficits,
        decay: decay_fit(u, radius / 3.0, 2.0 * radius / 3.0).ok(),
        x_offset_of_max: rep.sup_location.x_norm(),
        h1_gamma_norm: discrete_h1_gamma_norm(u),
    })
}

fn omega_sup_abs(u: &Field, axis: usize, lambda: f64) -> Result<f64> {
    let w = crate::diagnostics::omega_field(u, axis, lambda)?;
    Ok(w.values().iter().fold(0.0, |m, v| m.max(v.abs())))
}

fn run_ground_state(cfg: &ExperimentConfig, params: GrushinParams, art: &mut Artifacts) -> Result<(Value, bool)> {
    let grid = Arc::new(GridSpec::grushin_box(params, cfg.radius, cfg.nodes)?);
    let nl = nonlinearity(cfg)?;
    let op = DiscreteOperator::assemble(&grid)?;
    let rep = solve_with_operator(&op, &nl, &scaled_default_guess(&op, &nl)?, &cfg.solver)?;
    let diag = ground_state_diagnostics(&rep, cfg.radius, cfg.lambda_count)?;
    art.field("solution.grsh", &rep.field)?;
    art.csv("solution.csv", |out| rep.field.write_csv(out))?;
    write_history(art, "residual_history.csv", &rep)?;
    art.csv("deficits.csv", |out| {
        let rows: Vec<DeficitPoint> = diag.deficits.iter().flat_map(|(_, r)| r.iter().copied()).collect();
        write_deficit_csv(&rows, out)
    })?;
    if let Some(fit) = &diag.decay {
        art.csv("decay_fit.csv", |out| write_decay_csv(fit, out))?;
    }
    if cfg.problem == Problem::MovingPlane {
        if let Some((_, rows)) = diag.deficits.first() {
            let lam = rows[0].lambda;
            art.field("omega_first_plane.grsh", &crate::diagnostics::omega_field(&rep.field, 0, lam)?)?;
        }
    }
    let passed = diag.evenness_deficit <= SYMMETRY_TOL
        && diag.max_plane_deficit <= SYMMETRY_TOL
        && diag.decay.is_some_and(|f| f.r_squared >= DECAY_R2_MIN && f.a > 0.0);
    Ok((json!({ "solve": rep.summary(), "diagnostics": diag }), passed))
}

fn run_dirichlet(cfg: &ExperimentConfig, params: GrushinParams, halfspace: bool, art: &mut Artifacts) -> Result<(Value, bool)> {
    let grid = Arc::new(if halfspace {
        GridSpec::halfspace_box(params, cfg.radius, cfg.nodes)?
    } else {
        GridSpec::grushin_box(params, cfg.radius, cfg.nodes)?
    });
    let nl = nonlinearity(cfg)?;
    let rep = solve_nehari(&grid, &nl, &cfg.solver)?;
    art.field("solution.grsh", &rep.field)?;
    art.csv("solution.csv", |out| rep.field.write_csv(out))?;
    write_history(art, "residual_history.csv", &rep)?;
    let k = params.n() + params.l() - 1;
    let mid = 0.5 * (grid.lo()[k] + grid.hi()[k]);
    let half = 0.5 * (grid.hi()[k] - grid.lo()[k]);
    let spec = ReflectionSpec::snapped(&grid, params.l() - 1, cfg.lambda_count, mid, mid + 0.5 * half)?;
    let deficits = reflection_deficit(&rep.field, &spec)?;
    art.csv("deficits.csv", |out| write_deficit_csv(&deficits, out))?;
    let max_deficit = deficits.iter().map(|r| r.deficit).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        json!({
            "solve": rep.summary(),
            "min_value": rep.field.min(),
            "max_plane_deficit": max_deficit,
            "reflection_axis": params.l() - 1,
        }),
        true,
    ))
}

/// Parameters of one perturbed member of the a priori family:
/// `h(z) = h_mean + h_amp sin(ω Σx + φ) cos(ω Σy)` and
/// `g(z) = g_amp exp(-d(z,0)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyMember {
    pub h_mean: f64,
    pub h_amp: f64,
    pub omega: f64,
    pub phase: f64,
    pub g_amp: f64,
}

impl FamilyMember {
    pub const BASELINE: FamilyMember = FamilyMember { h_mean: 1.0, h_amp: 0.0, omega: 1.0, phase: 0.0, g_amp: 0.0 };

    /// Seeded member with `h ∈ [0.5, 2]` and `0 ≤ g ≤ 0.05`.
    pub fn random(rng: &mut SplitMix64) -> Self {
        let h_mean = rng.uniform(0.8, 1.5);
        let h_amp = rng.uniform(0.0, 1.0) * (h_mean - 0.5).min(2.0 - h_mean);
        Self {
            h_mean,
            h_amp,
            omega: rng.uniform(0.5, 2.0),
            phase: rng.uniform(0.0, std::f64::consts::TAU),
            g_amp: rng.uniform(0.0, 0.05),
        }
    }

    pub fn nonlinearity(&self, p: f64, params: GrushinParams) -> Result<Nonlinearity> {
        let m = *self;
        let h = ScalarFunction::new(move |z| {
            let sx: f64 = z.x.iter().sum();
            let sy: f64 = z.y.iter().sum();
            m.h_mean + m.h_amp * (m.omega * sx + m.phase).sin() * (m.omega * sy).cos()
        });
        let g = ScalarFunction::new(move |z| m.g_amp * (-params.norm(z).powi(2)).exp());
        Ok(Nonlinearity::power(p)?.with_coefficient(Source::Function(h)).with_forcing(Source::Function(g)))
    }
}

/// Largest ratio of a member's maximum to the baseline maximum allowed by the
/// a priori check.
pub const APRIORI_RATIO_MAX: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct AprioriOutcome {
    pub baseline_sup: f64,
    pub max_ratio: f64,
    pub members: Vec<FamilyMember>,
    pub rows: Vec<crate::semilinear::AprioriRow>,
}

/// Solves the baseline (`h ≡ 1`, `g ≡ 0`) and `members` seeded perturbations.
pub fn apriori_experiment(grid: &Arc<GridSpec>, p: f64, members: usize, seed: u64, cfg: &SolveConfig) -> Result<AprioriOutcome> {
    let params = *grid.params();
    let mut rng = SplitMix64::new(seed);
    let specs: Vec<FamilyMember> = (0..members).map(|_| FamilyMember::random(&mut rng)).collect();
    let family = specs.iter().map(|m| m.nonlinearity(p, params)).collect::<Result<Vec<_>>>()?;
    let baseline = apriori_sweep(grid, &[FamilyMember::BASELINE.nonlinearity(p, params)?], cfg)?;
    let baseline_sup = baseline[0].sup_value;
    let rows = apriori_sweep(grid, &family, cfg)?;
    let max_ratio = rows.iter().map(|r| r.sup_value / baseline_sup).fold(0.0, f64::max);
    Ok(AprioriOutcome { baseline_sup, max_ratio, members: specs, rows })
}

fn run_apriori(cfg: &ExperimentConfig, params: GrushinParams, art: &mut Artifacts) -> Result<(Value, bool)> {
    let grid = Arc::new(GridSpec::grushin_box(params, cfg.radius, cfg.nodes)?);
    let out = apriori_experiment(&grid, cfg.p, cfg.members, cfg.seed, &cfg.solver)?;
    art.csv("apriori.csv", |w| write_apriori_csv(&out.rows, w))?;
    art.csv("family.csv", |w| {
        writeln!(w, "member,h_mean,h_amp,omega,phase,g_amp")?;
        for (i, m) in out.members.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{},{}",
                fmt_f64(m.h_mean),
                fmt_f64(m.h_amp),
                fmt_f64(m.omega),
                fmt_f64(m.phase),
                fmt_f64(m.g_amp)
            )?;
        }
        Ok(())
    })?;
    let passed = out.max_ratio <= APRIORI_RATIO_MAX;
    Ok((serde_json::to_value(&out)?, passed))
}

/// Largest pairwise relative spread of `sup u_R · R^{2/(p-1)}` allowed.
pub const SCALING_SPREAD_MAX: f64 = 0.15;
/// Covariance residual allowed, as a multiple of the solver residual.
pub const COVARIANCE_FACTOR: f64 = 10.0;
/// Blow-up normalisation and collapse tolerance.
pub const BLOWUP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub radius: f64,
    pub sup_value: f64,
    /// `sup u_R · R^{2/(p-1)}`
    pub scaled_sup: f64,
    pub newton_iterations: usize,
    pub final_residual: f64,
    /// Residual of the previous radius's solution dilated onto this box.
    pub covariance_residual: Option<f64>,
    /// Sup-distance between that dilate and this solution.
    pub covariance_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupRow {
    pub lambda: f64,
    pub max_value: f64,
    pub sup: f64,
    pub value_at_origin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingOutcome {
    pub p: f64,
    pub rows: Vec<ScalingRow>,
    /// Largest `|a - b| / min(a, b)` over pairs of scaled maxima.
    pub max_pairwise_spread: f64,
    /// Largest covariance residual divided by the target solve's residual.
    pub max_covariance_ratio: f64,
    pub blowup: Vec<BlowupRow>,
    pub collapse_distance: f64,
    #[serde(skip)]
    pub reports: Vec<SolveReport>,
    #[serde(skip)]
    pub rescaled: Vec<Field>,
}

pub fn scaling_experiment(params: GrushinParams, radii: &[f64], nodes: usize, p: f64, cfg: &SolveConfig) -> Result<ScalingOutcome> {
    let nl = Nonlinearity::power(p)?;
    let reports = box_size_sweep(params, radii, nodes, &nl, cfg)?;
    let e = 2.0 / (p - 1.0);
    let mut rows: Vec<ScalingRow> = radii
        .iter()
        .zip(&reports)
        .map(|(&radius, rep)| ScalingRow {
            radius,
            sup_value: rep.sup_value,
            scaled_sup: rep.sup_value * radius.powf(e),
            newton_iterations: rep.newton_iterations,
            final_residual: rep.final_residual(),
            covariance_residual: None,
            covariance_distance: None,
        })
        .collect();
    let mut max_covariance_ratio: f64 = 0.0;
    for i in 1..reports.len() {
        let lambda = radii[i - 1] / radii[i];
        let dilated = dilate_solution(&reports[i - 1].field, lambda, p)?;
        let op = DiscreteOperator::assemble(dilated.grid())?;
        let res = residual_field(&op, &nl, &dilated)?;
        let r = res.values().iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let dist = dilated
            .values()
            .iter()
            .zip(reports[i].field.values())
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        rows[i].covariance_residual = Some(r);
        rows[i].covariance_distance = Some(dist);
        max_covariance_ratio = max_covariance_ratio.max(r / rows[i].final_residual.max(f64::MIN_POSITIVE));
    }
    let mut max_pairwise_spread: f64 = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let s = (a.scaled_sup - b.scaled_sup).abs() / a.scaled_sup.min(b.scaled_sup);
            max_pairwise_spread = max_pairwise_spread.max(s);
        }
    }
    let seq = blowup_rescale(&reports, p, params)?;
    let blowup = seq
        .members
        .iter()
        .map(|m| BlowupRow { lambda: m.lambda, max_value: m.max_value, sup: m.sup, value_at_origin: m.value_at_origin })
        .collect();
    Ok(ScalingOutcome {
        p,
        rows,
        max_pairwise_spread,
        max_covariance_ratio,
        blowup,
        collapse_distance: seq.collapse_distance(),
        rescaled: seq.members.iter().map(|m| m.field.clone()).collect(),
        reports,
    })
}

impl ScalingOutcome {
    pub fn blowup_normalised(&self) -> bool {
        self.blowup
            .iter()
            .all(|b| (b.sup - 1.0).abs() <= BLOWUP_TOL && (b.value_at_origin - 1.0).abs() <= BLOWUP_TOL)
    }

    pub fn passed(&self) -> bool {
        self.max_pairwise_spread <= SCALING_SPREAD_MAX
            && self.max_covariance_ratio <= COVARIANCE_FACTOR
            && self.blowup_normalised()
            && self.collapse_distance <= BLOWUP_TOL
    }
}

fn run_scaling(cfg: &ExperimentConfig, params: GrushinParams, art: &mut Artifacts) -> Result<(Value, bool)> {
    let out = scaling_experiment(params, &cfg.radii, cfg.nodes, cfg.p, &cfg.solver)?;
    art.csv("scaling.csv", |w| {
        writeln!(w, "radius,sup,scaled_sup,newton_iterations,final_residual,covariance_residual,covariance_distance")?;
        for r in &out.rows {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_f64(r.radius),
                fmt_f64(r.sup_value),
                fmt_f64(r.scaled_sup),
                r.newton_iterations,
                fmt_f64(r.final_residual),
                opt(r.covariance_residual),
                opt(r.covariance_distance)
            )?;
        }
        Ok(())
    })?;
    art.csv("blowup.csv", |w| {
        writeln!(w, "member,lambda,max_value,sup,value_at_origin")?;
        for (i, b) in out.blowup.iter().enumerate() {
            writeln!(w, "{i},{},{},{},{}", fmt_f64(b.lambda), fmt_f64(b.max_value), fmt_f64(b.sup), fmt_f64(b.value_at_origin))?;
        }
        Ok(())
    })?;
    for (i, (rep, v)) in out.reports.iter().zip(&out.rescaled).enumerate() {
        art.field(&format!("solution_{i}.grsh"), &rep.field)?;
        art.field(&format!("rescaled_{i}.grsh"), v)?;
    }
    let passed = out.passed();
    Ok((serde_json::to_value(&out)?, passed))
}

/// Identity tolerances: relative error at the default step, error ratio when
/// the step halves, and the absolute bound for the harmonic power.
pub const IDENTITY_REL_TOL: f64 = 1e-4;
pub const IDENTITY_RATIO_MIN: f64 = 3.0;
pub const HARMONIC_ABS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityOutcome {
    pub checks: Vec<crate::checks::IdentityCheck>,
    /// Index of the harmonic power check in `checks`.
    pub harmonic: usize,
}

impl IdentityOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().enumerate().all(|(i, c)| {
            let rel_ok = if i == self.harmonic {
                c.richardson_max_abs <= HARMONIC_ABS_TOL
            } else {
                c.max_rel_error <= IDENTITY_REL_TOL
            };
            rel_ok && c.error_ratio >= IDENTITY_RATIO_MIN
        })
    }
}

pub fn identity_experiment(params: GrushinParams, samples: usize, seed: u64, h: f64) -> Result<IdentityOutcome> {
    let points = sample_points(&params, &SamplingRegion::default(), samples, seed)?;
    let mut checks = vec![barrier_identity(identity_barrier(&params)?, &points, h, &params)?];
    for b in identity_power_exponents(&params) {
        checks.push(power_identity(b, &points, h, &params)?);
    }
    Ok(IdentityOutcome { harmonic: checks.len() - 1, checks })
}

fn run_identities(cfg: &ExperimentConfig, params: GrushinParams, art: &mut Artifacts) -> Result<(Value, bool)> {
    let out = identity_experiment(params, cfg.samples, cfg.seed, cfg.fd_step)?;
    art.csv("identities.csv", |w| write_identity_csv(&out.checks, w))?;
    Ok((serde_json::to_value(&out)?, out.passed()))
}

pub const KELVIN_REL_TOL: f64 = 1e-3;
pub const KELVIN_ORDER_MIN: f64 = 1.7;
pub const KELVIN_INVOLUTION_TOL: f64 = 1e-10;

pub fn kelvin_experiment(params: GrushinParams, samples: usize, seed: u64, h: f64) -> Result<crate::checks::KelvinCheck> {
    let points = sample_points(&params, &kelvin_region(), samples, seed)?;
    kelvin_check(&params, &points, h)
}

pub fn kelvin_passed(c: &crate::checks::KelvinCheck) -> bool {
    c.max_rel_residual <= KELVIN_REL_TOL
        && c.observed_order >= KELVIN_ORDER_MIN
        && c.point_involution_error <= KELVIN_INVOLUTION_TOL
        && c.function_involution_error <= KELVIN_INVOLUTION_TOL
}

fn run_kelvin(cfg: &ExperimentConfig, params: GrushinParams, art: &mut Artifacts) -> Result<(Value, bool)> {
    let out = kelvin_experiment(params, cfg.samples, cfg.seed, cfg.fd_step)?;
    art.csv("kelvin.csv", |w| out.report.write_csv(w))?;
    Ok((serde_json::to_value(&out)?, kelvin_passed(&out)))
}

/// Self-contained checks runnable without a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Kelvin,
    MaximumPrinciple,
    GroundState,
    Scaling,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["identities", "kelvin", "maximum_principle", "ground_state", "scaling", "all"];

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Identities, Suite::Kelvin, Suite::MaximumPrinciple, Suite::GroundState, Suite::Scaling],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identities" => Suite::Identities,
            "kelvin" => Suite::Kelvin,
            "maximum_principle" => Suite::MaximumPrinciple,
            "ground_state" => Suite::GroundState,
            "scaling" => Suite::Scaling,
            "all" => Suite::All,
            _ => {
                return Err(Error::InvalidParams(format!(
                    "unknown suite '{s}' (expected one of {})",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub details: Value,
}

/// Nodes per axis and number of right-hand sides of the maximum principle
/// suite.
pub const MAX_PRINCIPLE_NODES: usize = 64;
pub const MAX_PRINCIPLE_SOLVES: usize = 20;
pub const MAX_PRINCIPLE_TOL: f64 = 1e-12;

/// Runs `suite` with default settings for `params`.
pub fn verify(suite: Suite, params: GrushinParams, seed: u64) -> Result<Vec<SuiteReport>> {
    let cfg = SolveConfig::default();
    suite
        .members()
        .into_iter()
        .map(|s| {
            let (passed, details) = match s {
                Suite::Identities => {
                    let out = identity_experiment(params, 100, seed, DEFAULT_FD_STEP)?;
                    (out.passed(), serde_json::to_value(&out)?)
                }
                Suite::Kelvin => {
                    let out = kelvin_experiment(params, 100, seed, DEFAULT_FD_STEP)?;
                    (kelvin_passed(&out), serde_json::to_value(&out)?)
                }
                Suite::MaximumPrinciple => {
                    let grid = Arc::new(GridSpec::grushin_box(params, 2.0, MAX_PRINCIPLE_NODES)?);
                    let out = crate::checks::maximum_principle_check(&grid, MAX_PRINCIPLE_SOLVES, seed)?;
                    (out.min_value >= -MAX_PRINCIPLE_TOL, serde_json::to_value(&out)?)
                }
                Suite::GroundState => {
                    let (radius, nodes) = ground_state_box(params);
                    let grid = Arc::new(GridSpec::grushin_box(params, radius, nodes)?);
                    let nl = Nonlinearity::ground_state(default_exponent(params)?)?;
                    let op = DiscreteOperator::assemble(&grid)?;
                    let rep = solve_with_operator(&op, &nl, &scaled_default_guess(&op, &nl)?, &cfg)?;
                    let diag = ground_state_diagnostics(&rep, radius, 20)?;
                    let passed = diag.evenness_deficit <= SYMMETRY_TOL
                        && diag.max_plane_deficit <= SYMMETRY_TOL
                        && diag.decay.is_some_and(|f| f.r_squared >= DECAY_R2_MIN && f.a > 0.0);
                    let mut v = serde_json::to_value(&diag)?;
                    v.as_object_mut().map(|o| o.remove("deficits"));
                    (passed, v)
                }
                Suite::Scaling => {
                    let nodes = if params.dim() == 2 { 128 } else { 32 };
                    let out = scaling_experiment(params, &[4.0, 8.0, 16.0], nodes, default_exponent(params)?, &cfg)?;
                    (out.passed(), serde_json::to_value(&out)?)
                }
                Suite::All => unreachable!("expanded by members()"),
            };
            Ok(SuiteReport { suite: s, passed, details })
        })
        .collect()
}

/// Default radius and nodes per axis for ground states. In 3D the `y` extent
/// `R^{1+γ}` outruns what 48 nodes resolve, so the box is smaller.
pub fn ground_state_box(params: GrushinParams) -> (f64, usize) {
    if params.dim() == 2 {
        (12.0, 256)
    } else {
        (6.0, 48)
    }
}

/// `3` when below `(N_γ+2)/(N_γ-2)`, otherwise halfway between 1 and that
/// critical exponent.
pub fn default_exponent(params: GrushinParams) -> Result<f64> {
    let critical = params.critical_exponents()?.serrin_upper;
    Ok(if 3.0 < critical { 3.0 } else { 0.5 * (1.0 + critical) })
}

/// Summary of a field file for `inspect`.
#[derive(Debug, Clone, Serialize)]
pub struct FieldInfo {
    #[serde(rename = "N")]
    pub n: usize,
    pub l: usize,
    pub gamma: f64,
    pub dims: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub node_count: usize,
    pub min: f64,
    pub max: f64,
    pub max_location: Vec<f64>,
    pub boundary_max_abs: f64,
    pub h1_gamma_norm: f64,
}

pub fn inspect(path: impl AsRef<Path>) -> Result<FieldInfo> {
    let f = load_field(path)?;
    let g = f.grid();
    let p = g.params();
    let (max, node) = f.sup();
    let boundary_max_abs = (0..g.node_count())
        .filter(|&i| g.is_boundary(i))
        .map(|i| f.values()[i].abs())
        .fold(0.0, f64::max);
    Ok(FieldInfo {
        n: p.n(),
        l: p.l(),
        gamma: p.gamma(),
        dims: g.dims().to_vec(),
        lo: g.lo().to_vec(),
        hi: g.hi().to_vec(),
        node_count: g.node_count(),
        min: f.min(),
        max,
        max_location: g.coords(node),
        boundary_max_abs,
        h1_gamma_norm: discrete_h1_gamma_norm(&f),
    })
}

/// Whether an experiment performs a nonlinear solve (and can fail with a
/// solver error).
pub fn problem_solves(problem: Problem) -> bool {
    problem.solves()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(text: &str) -> FlatConfig {
        FlatConfig::parse(text).unwrap()
    }

    #[test]
    fn resolves_defaults_per_problem() {
        let c = ExperimentConfig::from_flat(&flat("problem=ground_state\nN=1\nl=1\ngamma=1")).unwrap();
        assert_eq!((c.radius, c.nodes, c.p, c.linear_term), (12.0, 256, 3.0, 1.0));
        let c = ExperimentConfig::from_flat(&flat("problem=apriori_sweep\nN=1\nl=1\ngamma=1")).unwrap();
        assert_eq!(c.p, 4.0);
        // N_γ = 5 makes p = 3 supercritical
        let c = ExperimentConfig::from_flat(&flat("problem=ground_state\nN=1\nl=2\ngamma=1")).unwrap();
        assert_eq!(c.p, 0.5 * (1.0 + 7.0 / 3.0));
        assert_eq!(c.nodes, 48);
    }

    #[test]
    fn config_errors() {
        let e = ExperimentConfig::from_flat(&flat("problem=identities\nN=1\nl=1")).unwrap_err();
        assert!(matches!(&e, Error::MissingKey(k) if k == "gamma"));
        let e = ExperimentConfig::from_flat(&flat("problem=nope\nN=1\nl=1\ngamma=1")).unwrap_err();
        assert!(e.is_config_error());
        let e = ExperimentConfig::from_flat(&flat("problem=identities\nN=1\nl=1\ngamma=1\ncolour=red")).unwrap_err();
        assert!(e.to_string().contains("colour"));
        let e = ExperimentConfig::from_flat(&flat("problem=identities\nN=1\nl=1\ngamma=-1")).unwrap_err();
        assert!(e.is_config_error());
    }

    #[test]
    fn family_coefficients_stay_in_range() {
        let p = GrushinParams::new(1, 1, 1.0).unwrap();
        let grid = GridSpec::grushin_box(p, 4.0, 33).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let m = FamilyMember::random(&mut rng);
            let nl = m.nonlinearity(4.0, p).unwrap();
            for v in nl.coefficient().sample(&grid).unwrap() {
                assert!((0.5..=2.0).contains(&v));
            }
            for v in nl.forcing().sample(&grid).unwrap() {
                assert!((0.0..=0.05).contains(&v));
            }
        }
    }

    #[test]
    fn identities_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::from_flat(&flat("problem=identities\nN=1\nl=1\ngamma=1\nsamples=10")).unwrap();
        c.output_dir = dir.path().to_path_buf();
        let out = run(&c).unwrap();
        assert!(out.passed);
        assert!(dir.path().join("identities.csv").exists());
        assert_eq!(out.summary["config"]["samples"], 10);
    }
}
