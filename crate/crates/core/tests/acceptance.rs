//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use grushin_core::checks::{maximum_principle_check, seeded_rhs};
use grushin_core::closed_form::{barrier_value, power_grushin_laplacian, BarrierSpec, DEFAULT_FD_STEP};
use grushin_core::config::FlatConfig;
use grushin_core::diagnostics::decay_fit;
use grushin_core::discrete::solve_linear;
use grushin_core::experiment::{self, ExperimentConfig, Problem};
use grushin_core::io::field_roundtrip;
use grushin_core::rng::SplitMix64;
use grushin_core::semilinear::{default_initial_guess, residual_field, scaled_default_guess, solve_with_operator, Source};
use grushin_core::{DiscreteOperator, Field, GridSpec, GrushinParams, Nonlinearity, SolveConfig};
use nalgebra::{DMatrix, DVector};

const SEED: u64 = experiment::DEFAULT_SEED;

fn p11() -> GrushinParams {
    GrushinParams::new(1, 1, 1.0).unwrap()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(t: Duration, limit: f64) -> bool {
    t.as_secs_f64() < limit
}

fn barrier_identity() -> Outcome {
    let t = Instant::now();
    let out = experiment::identity_experiment(p11(), 100, SEED, DEFAULT_FD_STEP).unwrap();
    let c = &out.checks[0];
    let el = t.elapsed();
    outcome(
        c.max_rel_error <= 1e-4 && c.error_ratio >= 3.0 && c.rows.len() == 100 && within(el, 1.0),
        format!("{}: rel {:.2e}, ratio {:.2}, {:.2?}", c.name, c.max_rel_error, c.error_ratio, el),
    )
}

fn power_identity() -> Outcome {
    let t = Instant::now();
    let params = p11();
    let out = experiment::identity_experiment(params, 100, SEED, DEFAULT_FD_STEP).unwrap();
    let el = t.elapsed();
    let mut ok = within(el, 1.0);
    let mut parts = Vec::new();
    for (i, c) in out.checks.iter().enumerate().skip(1) {
        if i == out.harmonic {
            let b = params.homogeneous_dimension() - 2.0;
            let closed = c
                .rows
                .iter()
                .map(|r| power_grushin_laplacian(&r.point, b, &params).unwrap().abs())
                .fold(0.0, f64::max);
            ok &= closed <= 1e-6 && c.richardson_max_abs <= 1e-6 && c.error_ratio >= 3.0;
            parts.push(format!(
                "{}: |closed| {:.1e}, extrapolated fd {:.2e}, ratio {:.2}",
                c.name, closed, c.richardson_max_abs, c.error_ratio
            ));
        } else {
            ok &= c.max_rel_error <= 1e-4 && c.error_ratio >= 3.0;
            parts.push(format!("{}: rel {:.2e}, ratio {:.2}", c.name, c.max_rel_error, c.error_ratio));
        }
    }
    parts.push(format!("{el:.2?}"));
    outcome(ok, parts.join("; "))
}

fn kelvin_identity() -> Outcome {
    let t = Instant::now();
    let c = experiment::kelvin_experiment(p11(), 100, SEED, DEFAULT_FD_STEP).unwrap();
    let el = t.elapsed();
    outcome(
        experiment::kelvin_passed(&c) && c.max_rel_residual <= 1e-3 && c.observed_order >= 1.7 && within(el, 5.0),
        format!(
            "rel {:.2e}, order {:.2}, involution {:.1e}/{:.1e}, {:.2?}",
            c.max_rel_residual, c.observed_order, c.point_involution_error, c.function_involution_error, el
        ),
    )
}

/// `-Δ_γ` on interior nodes of a 2D grid, written out from the five-point
/// stencil.
fn dense_operator(grid: &GridSpec) -> DMatrix<f64> {
    let (nx, ny) = (grid.dims()[0], grid.dims()[1]);
    let (hx, hy) = (grid.spacing(0), grid.spacing(1));
    let g = grid.params().gamma();
    let (mx, my) = (nx - 2, ny - 2);
    let idx = |i: usize, j: usize| (i - 1) * my + (j - 1);
    let mut a = DMatrix::zeros(mx * my, mx * my);
    for i in 1..nx - 1 {
        let w = grid.axis_coord(0, i).abs().powf(2.0 * g);
        for j in 1..ny - 1 {
            let k = idx(i, j);
            a[(k, k)] = 2.0 / (hx * hx) + 2.0 * w / (hy * hy);
            for (ii, jj, v) in [
                (i - 1, j, 1.0 / (hx * hx)),
                (i + 1, j, 1.0 / (hx * hx)),
                (i, j - 1, w / (hy * hy)),
                (i, j + 1, w / (hy * hy)),
            ] {
                if (1..nx - 1).contains(&ii) && (1..ny - 1).contains(&jj) {
                    a[(k, idx(ii, jj))] = -v;
                }
            }
        }
    }
    a
}

fn maximum_principle() -> Outcome {
    let t = Instant::now();
    let grid = Arc::new(GridSpec::grushin_box(p11(), 2.0, 64).unwrap());
    let mp = maximum_principle_check(&grid, 20, SEED).unwrap();

    let small = Arc::new(GridSpec::new(p11(), vec![9, 9], vec![-1.0, -0.7], vec![1.3, 1.0]).unwrap());
    let op = DiscreteOperator::assemble(&small).unwrap();
    let a = dense_operator(&small);
    let mut entry_err: f64 = 0.0;
    for r in 0..op.size() {
        let (cols, vals) = op.row(r);
        let mut row = vec![0.0; op.size()];
        for (&c, &v) in cols.iter().zip(vals) {
            row[c] += v;
        }
        for (c, v) in row.iter().enumerate() {
            entry_err = entry_err.max((v - a[(r, c)]).abs() / a[(r, r)]);
        }
    }
    let lu = a.clone().lu();
    let mut rng = SplitMix64::new(SEED);
    let mut lu_err: f64 = 0.0;
    for _ in 0..5 {
        let rhs = seeded_rhs(&small, &mut rng);
        let b = DVector::from_vec(op.restrict(&rhs).unwrap());
        let exact = lu.solve(&b).unwrap();
        let cg = solve_linear(&op, &rhs, 1e-14, 10_000).unwrap();
        let x = op.restrict(&cg.field).unwrap();
        lu_err = x.iter().zip(exact.iter()).fold(lu_err, |m, (u, v)| m.max((u - v).abs()));
    }
    let el = t.elapsed();
    outcome(
        mp.solves == 20 && mp.min_value >= -1e-12 && entry_err <= 1e-12 && lu_err <= 1e-10 && within(el, 10.0),
        format!(
            "min {:.2e} over {} solves, stencil {:.1e}, LU {:.2e}, {:.2?}",
            mp.min_value, mp.solves, entry_err, lu_err, el
        ),
    )
}

fn manufactured() -> Outcome {
    let t = Instant::now();
    let grid = Arc::new(GridSpec::grushin_box(p11(), 3.0, 128).unwrap());
    let params = *grid.params();
    let op = DiscreteOperator::assemble(&grid).unwrap();
    let target = Field::from_fn_dirichlet(grid.clone(), |z| 1.5 * (-params.norm(z).powi(2)).exp());
    let p = 3.0;
    let au = op.apply(&target).unwrap();
    let g: Vec<f64> = au.values().iter().zip(target.values()).map(|(a, u)| a + u - u.powf(p)).collect();
    let nl = Nonlinearity::ground_state(p).unwrap().with_forcing(Source::Nodal(g.into()));
    let cfg = SolveConfig::default();
    let rep = solve_with_operator(&op, &nl, &default_initial_guess(&grid), &cfg).unwrap();
    let err = rep.field.sup_abs_diff(&target).unwrap();
    let res = residual_field(&op, &nl, &rep.field).unwrap();
    let rs = res.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let el = t.elapsed();
    outcome(
        err <= 1e-6 && rep.newton_iterations <= 15 && rs <= cfg.newton_tol && within(el, 30.0),
        format!("error {:.2e}, {} Newton steps, residual {:.1e}, {:.2?}", err, rep.newton_iterations, rs, el),
    )
}

struct GroundState {
    diag: experiment::GroundStateDiagnostics,
    elapsed: Duration,
}

fn ground_state() -> GroundState {
    let t = Instant::now();
    let grid = Arc::new(GridSpec::grushin_box(p11(), 12.0, 256).unwrap());
    let op = DiscreteOperator::assemble(&grid).unwrap();
    let nl = Nonlinearity::ground_state(3.0).unwrap();
    let rep = solve_with_operator(&op, &nl, &scaled_default_guess(&op, &nl).unwrap(), &SolveConfig::default()).unwrap();
    let diag = experiment::ground_state_diagnostics(&rep, 12.0, 20).unwrap();
    GroundState { diag, elapsed: t.elapsed() }
}

fn symmetry(gs: &GroundState) -> Outcome {
    let d = &gs.diag;
    let planes: usize = d.deficits.iter().map(|(_, r)| r.len()).sum();
    outcome(
        d.evenness_deficit <= 1e-8 && d.max_plane_deficit <= 1e-8 && planes == 20 && within(gs.elapsed, 60.0),
        format!(
            "reflection {:.1e}, moving plane {:.1e} over {} planes, {:.2?}",
            d.evenness_deficit, d.max_plane_deficit, planes, gs.elapsed
        ),
    )
}

fn decay(gs: &GroundState) -> Outcome {
    let Some(fit) = gs.diag.decay else {
        return outcome(false, "tail fit failed".into());
    };
    let params = p11();
    let g = Arc::new(GridSpec::grushin_box(params, 9.0, 81).unwrap());
    let spec = BarrierSpec::new(0.7, 1.3, 2.0).unwrap();
    let u = Field::from_fn(g, |z| barrier_value(z, &spec, &params));
    let exact = decay_fit(&u, 3.0, 6.0).unwrap();
    let rate_err = (exact.a - 0.7).abs();
    outcome(
        fit.inner_radius == 4.0
            && fit.outer_radius == 8.0
            && fit.r_squared >= 0.98
            && fit.a > 0.0
            && rate_err <= 1e-10,
        format!("a {:.4}, R² {:.5}, barrier rate error {:.1e}", fit.a, fit.r_squared, rate_err),
    )
}

fn scaling(s: &experiment::ScalingOutcome) -> Outcome {
    outcome(
        s.max_pairwise_spread <= 0.15 && s.max_covariance_ratio <= 10.0 && s.rows.len() == 3,
        format!(
            "products {:?}, spread {:.1e}, covariance/solver {:.3}",
            s.rows.iter().map(|r| format!("{:.6}", r.scaled_sup)).collect::<Vec<_>>(),
            s.max_pairwise_spread,
            s.max_covariance_ratio
        ),
    )
}

fn blowup(s: &experiment::ScalingOutcome) -> Outcome {
    let worst = s
        .blowup
        .iter()
        .map(|b| (b.sup - 1.0).abs().max((b.value_at_origin - 1.0).abs()))
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-3 && s.collapse_distance <= 1e-3 && s.blowup.len() == 3,
        format!("normalisation {:.1e}, collapse {:.1e}", worst, s.collapse_distance),
    )
}

fn apriori() -> Outcome {
    let t = Instant::now();
    let params = p11();
    let grid = Arc::new(GridSpec::grushin_box(params, 4.0, 128).unwrap());
    let out = match experiment::apriori_experiment(&grid, 4.0, 10, SEED, &SolveConfig::default()) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("solve failed: {e}")),
    };
    let mut csv = Vec::new();
    grushin_core::semilinear::write_apriori_csv(&out.rows, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let reported = csv.lines().next().unwrap().contains("x_offset") && csv.lines().count() == 11;
    let in_range = out.members.iter().all(|m| {
        m.h_mean - m.h_amp >= 0.5 && m.h_mean + m.h_amp <= 2.0 && (0.0..=0.05).contains(&m.g_amp)
    });
    let el = t.elapsed();
    outcome(
        params.homogeneous_dimension() == 3.0
            && out.rows.len() == 10
            && reported
            && in_range
            && out.max_ratio <= 10.0
            && within(el, 300.0),
        format!("baseline {:.4}, worst ratio {:.3}, {:.2?}", out.baseline_sup, out.max_ratio, el),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut count = 0;
    for problem in [Problem::Identities, Problem::DirichletPower] {
        let dir = tmp.path().join(problem.as_str());
        let mut runs = Vec::new();
        for _ in 0..2 {
            let mut flat = FlatConfig::parse(&format!("problem={problem}\nN=1\nl=1\ngamma=1\nnodes=48")).unwrap();
            flat.set("output_dir", dir.display());
            experiment::run(&ExperimentConfig::from_flat(&flat).unwrap()).unwrap();
            runs.push(read_dir_sorted(&dir));
        }
        identical &= runs[0] == runs[1];
        count += runs[0].len();
    }
    let field = grushin_core::io::load_field(tmp.path().join("dirichlet_power").join("solution.grsh")).unwrap();
    let back = field_roundtrip(&field, tmp.path().join("copy.grsh")).unwrap();
    let bit_exact = back.grid() == field.grid()
        && field.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    outcome(identical && bit_exact, format!("{count} artifacts identical: {identical}, roundtrip bit-exact: {bit_exact}"))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 barrier identity", barrier_identity()),
        ("2 power identity", power_identity()),
        ("3 Kelvin identity", kelvin_identity()),
        ("4 maximum principle", maximum_principle()),
        ("5 manufactured solve", manufactured()),
    ];
    let gs = ground_state();
    results.push(("6 symmetry", symmetry(&gs)));
    results.push(("7 decay", decay(&gs)));
    let sc = experiment::scaling_experiment(p11(), &[4.0, 8.0, 16.0], 128, 3.0, &SolveConfig::default()).unwrap();
    results.push(("8 scaling law", scaling(&sc)));
    results.push(("9 blow-up normalisation", blowup(&sc)));
    results.push(("10 a priori sweep", apriori()));
    results.push(("11 determinism and I/O", determinism()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
