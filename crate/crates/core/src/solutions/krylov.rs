//! Matrix-free Krylov solvers: preconditioned MINRES for symmetric systems
//! and restarted GMRES(m) for general ones. Operators are touched only
//! through [`LinearOperator::apply`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::dot;

pub trait LinearOperator: Sync {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KrylovMethod {
    Minres,
    Gmres { restart: usize },
}

impl Default for KrylovMethod {
    fn default() -> Self {
        KrylovMethod::Minres
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub method: KrylovMethod,
    /// Target for `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations between true-residual evaluations recorded in the history.
    pub check_every: usize,
    /// Stagnation is declared when the residual improves by less than 0.1%
    /// over this many iterations.
    pub stall_window: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { method: KrylovMethod::Minres, tol: 1e-8, max_iter: 10_000, check_every: 100, stall_window: 2000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KrylovLog {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    /// `(iteration, true relative residual)` samples.
    pub history: Vec<(usize, f64)>,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn residual(a: &dyn LinearOperator, x: &[f64], b: &[f64], scratch: &mut [f64]) -> f64 {
    a.apply(x, scratch);
    let r: Vec<f64> = b.par_iter().zip(scratch.par_iter()).map(|(bi, ai)| bi - ai).collect();
    norm(&r)
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

fn precondition(inv_diag: Option<&[f64]>, r: &[f64], out: &mut [f64]) {
    match inv_diag {
        Some(d) => out.par_iter_mut().enumerate().for_each(|(i, o)| *o = d[i] * r[i]),
        None => out.copy_from_slice(r),
    }
}

/// Solves `A x = b` starting from `x`. `inv_diag` must be positive for MINRES.
pub fn solve(
    a: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    opts: &KrylovOptions,
) -> Result<KrylovLog> {
    let bnorm = norm(b);
    let mut log = KrylovLog::default();
    let mut scratch = vec![0.0; b.len()];
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        log.converged = true;
        return Ok(log);
    }
    let mut rel = residual(a, x, b, &mut scratch) / bnorm;
    log.history.push((0, rel));
    let mut best_mark = (0usize, rel);
    while log.iterations < opts.max_iter {
        if rel <= opts.tol {
            log.converged = true;
            break;
        }
        let budget = opts.max_iter - log.iterations;
        let target = opts.tol / rel;
        let used = match opts.method {
            KrylovMethod::Minres => minres_cycle(a, b, x, inv_diag, target, budget, opts, &mut log, bnorm)?,
            KrylovMethod::Gmres { restart } => gmres_cycle(a, b, x, inv_diag, target, restart.min(budget).max(1)),
        };
        log.iterations += used;
        rel = residual(a, x, b, &mut scratch) / bnorm;
        log.history.push((log.iterations, rel));
        if log.iterations - best_mark.0 >= opts.stall_window {
            if rel > 0.999 * best_mark.1 {
                log.relative_residual = rel;
                return Err(Error::Stagnation { iterations: log.iterations, residual: rel });
            }
            best_mark = (log.iterations, rel);
        }
        if used == 0 {
            break;
        }
    }
    log.relative_residual = rel;
    log.converged = rel <= opts.tol;
    if !log.converged {
        return Err(Error::NonConvergence { iterations: log.iterations, residual: rel });
    }
    Ok(log)
}

/// One MINRES run until its residual estimate drops by `target` or the budget ends.
#[allow(clippy::too_many_arguments)]
fn minres_cycle(
    a: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    target: f64,
    budget: usize,
    opts: &KrylovOptions,
    log: &mut KrylovLog,
    bnorm: f64,
) -> Result<usize> {
    let n = b.len();
    let mut r1 = vec![0.0; n];
    a.apply(x, &mut r1);
    r1.par_iter_mut().zip(b.par_iter()).for_each(|(r, bi)| *r = bi - *r);
    let mut y = vec![0.0; n];
    precondition(inv_diag, &r1, &mut y);
    let beta1 = dot(&r1, &y).sqrt();
    if beta1 == 0.0 {
        return Ok(0);
    }
    // aim slightly below the target so the true residual usually passes on the first cycle
    let stop = 0.5 * target;
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0f64, 0.0f64, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut scratch = vec![0.0; n];
    let mut window = (0usize, 1.0f64);
    for itn in 1..=budget {
        let s = 1.0 / beta;
        v.par_iter_mut().zip(y.par_iter()).for_each(|(vi, yi)| *vi = s * yi);
        a.apply(&v, &mut y);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precondition(inv_diag, &r2, &mut y);
        oldb = beta;
        let b2 = dot(&r2, &y);
        if b2 < 0.0 {
            return Err(Error::Hypothesis("preconditioner is not positive definite".into()));
        }
        beta = b2.sqrt();

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

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        w.par_iter_mut()
            .enumerate()
            .for_each(|(i, wi)| *wi = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom);
        axpy(phi, &w, x);

        let est = phibar / beta1;
        if itn % opts.check_every == 0 {
            let rel = residual(a, x, b, &mut scratch) / bnorm;
            log.history.push((log.iterations + itn, rel));
        }
        if est <= stop || beta == 0.0 {
            return Ok(itn);
        }
        if itn - window.0 >= opts.stall_window {
            if est > 0.999 * window.1 {
                return Ok(itn);
            }
            window = (itn, est);
        }
    }
    Ok(budget)
}

/// One restart cycle of right-preconditioned GMRES with `m` Arnoldi steps.
fn gmres_cycle(
    a: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    target: f64,
    m: usize,
) -> usize {
    let n = b.len();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| *ri = bi - *ri);
    let beta = norm(&r);
    if beta == 0.0 {
        return 0;
    }
    let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
    let mut hess = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    g[0] = beta;
    let mut z = vec![0.0; n];
    let mut steps = 0;
    for j in 0..m {
        precondition(inv_diag, &basis[j], &mut z);
        let mut wv = vec![0.0; n];
        a.apply(&z, &mut wv);
        // modified Gram-Schmidt
        for (i, q) in basis.iter().enumerate() {
            let hij = dot(&wv, q);
            hess[i][j] = hij;
            axpy(-hij, q, &mut wv);
        }
        let hn = norm(&wv);
        hess[j + 1][j] = hn;
        for i in 0..j {
            let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
            hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
            hess[i][j] = t;
        }
        let den = hess[j][j].hypot(hess[j + 1][j]);
        cs[j] = hess[j][j] / den;
        sn[j] = hess[j + 1][j] / den;
        hess[j][j] = den;
        hess[j + 1][j] = 0.0;
        g[j + 1] = -sn[j] * g[j];
        g[j] *= cs[j];
        steps = j + 1;
        if g[j + 1].abs() / beta <= 0.5 * target || hn == 0.0 {
            break;
        }
        basis.push(wv.iter().map(|v| v / hn).collect());
    }
    let mut yk = vec![0.0; steps];
    for i in (0..steps).rev() {
        let mut s = g[i];
        for k in i + 1..steps {
            s -= hess[i][k] * yk[k];
        }
        yk[i] = s / hess[i][i];
    }
    let mut update = vec![0.0; n];
    for (k, q) in basis.iter().take(steps).enumerate() {
        axpy(yk[k], q, &mut update);
    }
    precondition(inv_diag, &update, &mut z);
    axpy(1.0, &z, x);
    steps
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1-D Dirichlet Laplacian shifted to be indefinite.
    struct Shifted {
        n: usize,
        shift: f64,
    }

    impl LinearOperator for Shifted {
        fn len(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < self.n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r - self.shift * x[i];
            }
        }
    }

    fn check(method: KrylovMethod) {
        let a = Shifted { n: 200, shift: 0.05 };
        let truth: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; 200];
        a.apply(&truth, &mut b);
        let mut x = vec![0.0; 200];
        let opts = KrylovOptions { method, tol: 1e-10, max_iter: 20_000, ..Default::default() };
        let inv = vec![1.0 / 1.95; 200];
        let log = solve(&a, &b, &mut x, Some(&inv), &opts).unwrap();
        assert!(log.converged && log.relative_residual <= 1e-10);
        let err = x.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn minres_solves_indefinite_system() {
        check(KrylovMethod::Minres);
    }

    #[test]
    fn gmres_solves_indefinite_system() {
        check(KrylovMethod::Gmres { restart: 60 });
    }

    #[test]
    fn reports_non_convergence() {
        let a = Shifted { n: 400, shift: 0.0 };
        let b = vec![1.0; 400];
        let mut x = vec![0.0; 400];
        let opts = KrylovOptions { tol: 1e-12, max_iter: 5, ..Default::default() };
        assert!(matches!(solve(&a, &b, &mut x, None, &opts), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = Shifted { n: 10, shift: 0.0 };
        let mut x = vec![1.0; 10];
        let log = solve(&a, &[0.0; 10], &mut x, None, &KrylovOptions::default()).unwrap();
        assert!(log.converged);
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
