//! Krylov solvers on plain vectors. Dot products are sequential so results do
//! not depend on the thread count.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `|b - A x| / |b|`.
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Unpreconditioned conjugate gradients for SPD `A`.
pub fn cg(
    matvec: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    pcg(matvec, None, b, x0, tol, max_iter)
}

/// Conjugate gradients with an optional Jacobi preconditioner given as the
/// inverse diagonal.
pub fn pcg(
    matvec: impl Fn(&[f64], &mut [f64]),
    inv_diag: Option<&[f64]>,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    };
    let mut r = vec![0.0; n];
    matvec(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > tol {
        if it == max_iter {
            return Err(Error::MaxIterationsExceeded {
                iterations: it,
                residual: rel,
            });
        }
        matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // lost positive definiteness; report where we are
            return Err(Error::MaxIterationsExceeded {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        it += 1;
        rel = norm(&r) / bnorm;
    }
    Ok(KrylovOutcome {
        x,
        iterations: it,
        residual: rel,
    })
}

/// Preconditioned MINRES for symmetric, possibly indefinite `A`, with an SPD
/// Jacobi preconditioner given as the inverse diagonal.
///
/// Stops when the preconditioned residual estimate drops below `tol` relative
/// to its initial value; the reported residual is the true 2-norm one.
pub fn minres(
    matvec: impl Fn(&[f64], &mut [f64]),
    inv_diag: Option<&[f64]>,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    };

    let mut r1 = vec![0.0; n];
    matvec(&x, &mut r1);
    for (ri, bi) in r1.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut y = vec![0.0; n];
    precond(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if beta1 <= 0.0 {
        let residual = norm(&r1) / bnorm;
        return Ok(KrylovOutcome { x, iterations: 0, residual });
    }
    let beta1 = beta1.sqrt();

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut it = 0;

    while phibar / beta1 > tol {
        if it == max_iter {
            let residual = true_residual(&matvec, b, &x, bnorm);
            return Err(Error::MaxIterationsExceeded {
                iterations: it,
                residual,
            });
        }
        it += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        matvec(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::InvalidParams("MINRES preconditioner is not SPD".into()));
        }
        beta = bb.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);
        if beta == 0.0 {
            break;
        }
    }
    let residual = true_residual(&matvec, b, &x, bnorm);
    Ok(KrylovOutcome {
        x,
        iterations: it,
        residual,
    })
}

fn true_residual(matvec: &impl Fn(&[f64], &mut [f64]), b: &[f64], x: &[f64], bnorm: f64) -> f64 {
    let mut ax = vec![0.0; b.len()];
    matvec(x, &mut ax);
    ax.iter()
        .zip(b)
        .map(|(a, bi)| (bi - a) * (bi - a))
        .sum::<f64>()
        .sqrt()
        / bnorm
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Laplacian shifted by `shift`: indefinite for large shifts.
    fn lap1d(shift: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            let n = x.len();
            for i in 0..n {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - left - right - shift * x[i];
            }
        }
    }

    #[test]
    fn cg_solves_spd() {
        let n = 50;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let out = cg(lap1d(0.0), &b, vec![0.0; n], 1e-12, 500).unwrap();
        let mut ax = vec![0.0; n];
        lap1d(0.0)(&out.x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn minres_solves_indefinite() {
        let n = 60;
        // eigenvalues 2 - 2cos(kπ/61) - 0.5 straddle zero
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let inv_diag = vec![0.5; n];
        let out = minres(lap1d(0.5), Some(&inv_diag), &b, vec![0.0; n], 1e-12, 1000).unwrap();
        assert!(out.residual < 1e-9, "residual {}", out.residual);
        let plain = minres(lap1d(0.5), None, &b, vec![0.0; n], 1e-12, 1000).unwrap();
        assert!(plain.residual < 1e-9);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let out = minres(lap1d(0.0), None, &[0.0; 4], vec![1.0; 4], 1e-8, 10).unwrap();
        assert_eq!(out.x, vec![0.0; 4]);
        assert_eq!(out.iterations, 0);
    }
}
