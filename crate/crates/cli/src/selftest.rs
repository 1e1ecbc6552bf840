//! Identity suite: pointwise checks on analytic forms with fourth-order centred
//! differences,
//! plus one grid-level commutator check at the configured resolution.

use grushin_core::geometry::{angle_psi, dilate, fundamental_solution, pseudo_gauge};
use grushin_core::ops::{commutator_residual, x_derivative};
use grushin_core::{GrushinParams, Point, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub max_error: f64,
    pub tol: f64,
    pub samples: usize,
    pub pass: bool,
}

fn check(name: &str, max_error: f64, tol: f64, samples: usize) -> Check {
    Check { name: name.into(), max_error, tol, samples, pass: max_error.is_finite() && max_error <= tol }
}

const DILATION_TOL: f64 = 1e-12;
const STEP: f64 = 2.5e-4;

struct Pointwise {
    p: GrushinParams,
}

impl Pointwise {
    fn abs_x_beta(&self, c: &[f64]) -> f64 {
        c[..self.p.m()].iter().map(|v| v * v).sum::<f64>().powf(self.p.beta() / 2.0)
    }

    fn shifted(&self, f: &dyn Fn(&[f64]) -> f64, c: &[f64], k: usize, h: f64) -> [f64; 4] {
        let mut q = c.to_vec();
        [2.0, 1.0, -1.0, -2.0].map(|s| {
            q[k] = c[k] + s * h;
            f(&q)
        })
    }

    fn partial(&self, f: &dyn Fn(&[f64]) -> f64, c: &[f64], k: usize, h: f64) -> f64 {
        let [a, b, d, e] = self.shifted(f, c, k, h);
        (-a + 8.0 * b - 8.0 * d + e) / (12.0 * h)
    }

    fn second(&self, f: &dyn Fn(&[f64]) -> f64, c: &[f64], k: usize, h: f64) -> f64 {
        let [a, b, d, e] = self.shifted(f, c, k, h);
        (-a + 16.0 * b - 30.0 * f(c) + 16.0 * d - e) / (12.0 * h * h)
    }

    fn x_field(&self, f: &dyn Fn(&[f64]) -> f64, c: &[f64], i: usize, h: f64) -> f64 {
        let d = self.partial(f, c, i, h);
        if i < self.p.m() {
            d
        } else {
            self.abs_x_beta(c) * d
        }
    }

    fn z(&self, f: &dyn Fn(&[f64]) -> f64, c: &[f64], h: f64) -> f64 {
        let m = self.p.m();
        (0..self.p.dim())
            .map(|k| {
                let coef = if k < m { c[k] } else { (self.p.beta() + 1.0) * c[k] };
                coef * self.partial(f, c, k, h)
            })
            .sum()
    }

    fn laplacian(&self, f: &dyn Fn(&[f64]) -> f64, c: &[f64], h: f64) -> (f64, f64) {
        let m = self.p.m();
        let w = self.abs_x_beta(c).powi(2);
        let mut sum = 0.0;
        let mut scale = 0.0;
        for k in 0..self.p.dim() {
            let t = self.second(f, c, k, h) * if k < m { 1.0 } else { w };
            sum += t;
            scale += t.abs();
        }
        (sum, scale)
    }
}

/// Samples a point in the configured box with `|x| ≥ x_min` and `ρ` in `[lo, hi]`.
fn sample(cfg: &RunConfig, p: &GrushinParams, rng: &mut ChaCha8Rng, x_min: f64, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let spec = cfg.grid_spec().ok()?;
    for _ in 0..10_000 {
        let c: Vec<f64> = (0..p.dim()).map(|k| rng.random_range(spec.lower[k]..spec.upper[k])).collect();
        let x = c[..p.m()].iter().map(|v| v * v).sum::<f64>().sqrt();
        let rho = pseudo_gauge(p, &Point::from_coords(p, &c).ok()?).ok()?;
        if x >= x_min && (lo..=hi).contains(&rho) {
            return Some(c);
        }
    }
    None
}

pub fn run(cfg: &RunConfig) -> Result<Vec<Check>, String> {
    let p = cfg.params()?;
    let pw = Pointwise { p };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.selftest_points;
    let tol = cfg.selftest_tol;
    let err = |e: grushin_core::Error| e.to_string();

    let rho = |c: &[f64]| pseudo_gauge(&p, &Point::from_coords(&p, c).unwrap()).unwrap();
    let psi = |c: &[f64]| angle_psi(&p, &Point::from_coords(&p, c).unwrap()).unwrap();
    let gamma = |c: &[f64]| fundamental_solution(&p, &Point::from_coords(&p, c).unwrap()).unwrap();
    let f = |c: &[f64]| (0.7 * c[0] + 0.3 * c[p.m()]).exp() * (1.0 + c[p.dim() - 1].powi(2));

    let (mut e_zrho, mut e_zpsi, mut e_grad, mut e_comm, mut e_gamma, mut e_dil) = (0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
    let mut count = 0;
    for _ in 0..n {
        let Some(c) = sample(cfg, &p, &mut rng, 0.2, 0.3, 0.9) else { break };
        count += 1;
        let r = rho(&c);
        e_zrho = e_zrho.max((pw.z(&rho, &c, STEP) - r).abs() / r);
        e_zpsi = e_zpsi.max(pw.z(&psi, &c, STEP).abs());
        let g: f64 = (0..p.dim()).map(|i| pw.x_field(&rho, &c, i, STEP).powi(2)).sum();
        e_grad = e_grad.max((g - psi(&c)).abs());
        for i in 0..p.dim() {
            let zf = |q: &[f64]| pw.z(&f, q, STEP);
            let xf = |q: &[f64]| pw.x_field(&f, q, i, STEP);
            let lhs = pw.x_field(&zf, &c, i, 10.0 * STEP) - pw.z(&xf, &c, 10.0 * STEP);
            let xi = pw.x_field(&f, &c, i, STEP);
            e_comm = e_comm.max((lhs - xi).abs() / f(&c).abs().max(1.0));
        }
        let (lap, scale) = pw.laplacian(&gamma, &c, 10.0 * STEP * r);
        e_gamma = e_gamma.max(lap.abs() / scale);
        let a = rng.random_range(-1.5f64..1.5).exp();
        let pt = Point::from_coords(&p, &c).map_err(err)?;
        let d = dilate(&p, a, &pt).map_err(err)?;
        let rd = pseudo_gauge(&p, &d).map_err(err)?;
        let sd = angle_psi(&p, &d).map_err(err)?;
        e_dil = e_dil.max(((rd - a * r) / (a * r)).abs()).max((sd - psi(&c)).abs());
    }
    if count == 0 {
        return Err("no sample points with |x| >= 0.2 and 0.3 <= rho <= 0.9 fit in the box".into());
    }

    let mut checks = vec![
        check("z_rho_equals_rho", e_zrho, tol, count),
        check("z_psi_vanishes", e_zpsi, tol, count),
        check("x_grad_rho_norm2_equals_psi", e_grad, tol, count),
        check("commutator_pointwise", e_comm, tol, count),
        check("laplacian_of_fundamental_solution", e_gamma, tol, count),
        check("dilation_scaling", e_dil, DILATION_TOL, count),
    ];

    let grid = cfg.grid()?;
    let u = ScalarField::sample(&grid, |c| c[0].exp()).map_err(err)?;
    let mut worst = 0f64;
    for k in 0..grid.dim() {
        let res = commutator_residual(&u, k).map_err(err)?.max_abs();
        let xn = x_derivative(&u, k).map_err(err)?.max_abs();
        worst = worst.max(if xn > 0.0 { res / xn } else { res });
    }
    checks.push(check("commutator_grid_exp_x1", worst, cfg.commutator_tol, grid.len()));
    Ok(checks)
}
