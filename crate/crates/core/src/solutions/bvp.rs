//! Dirichlet problem for the split system on a box.
//!
//! With `L` the discrete Grushin Laplacian restricted to interior nodes and
//! `L_b` its coupling to the boundary layer, the unknowns `(u, w)` solve
//!
//! ```text
//! [ -V   L ] [u]   [ -L_b g_w ]
//! [  L  -I ] [w] = [ -L_b g_u ]
//! ```
//!
//! which is symmetric because `|x|^{2β}` is constant along every `y` line.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::krylov::{self, KrylovOptions, LinearOperator};
use super::{Provenance, SolutionPair, DEFAULT_PSI_MIN};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, ScalarField, MAX_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvpOptions {
    pub krylov: KrylovOptions,
    pub psi_min: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self { krylov: KrylovOptions::default(), psi_min: DEFAULT_PSI_MIN }
    }
}

/// The mixed operator above, acting on `[u; w]` stored as two full-grid blocks
/// that vanish off the interior.
pub struct DirichletOperator {
    grid: Arc<Grid>,
    layer: usize,
    v: Vec<f64>,
    coef_y: Vec<f64>,
    inv_h2: Vec<f64>,
}

/// Builds the operator whose Dirichlet layer is the outermost valid layer of `v`.
pub fn dirichlet_operator(v: &ScalarField) -> Result<DirichletOperator> {
    let grid = v.grid().clone();
    let layer = v.margin();
    grid.check_margin(layer + 1)?;
    let kern = grid.kernel();
    let coef_y = grid.x2().iter().map(|&x2| kern.abs_x_pow_2beta(x2)).collect();
    let inv_h2 = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
    let vdata = v.data().iter().map(|&x| if x.is_nan() { 0.0 } else { x }).collect();
    Ok(DirichletOperator { grid, layer, v: vdata, coef_y, inv_h2 })
}

impl DirichletOperator {
    fn nodes(&self) -> usize {
        self.grid.len()
    }

    fn is_interior(&self, idx: usize) -> bool {
        self.grid.in_margin(idx, self.layer + 1)
    }

    fn is_layer(&self, idx: usize) -> bool {
        self.grid.in_margin(idx, self.layer) && !self.is_interior(idx)
    }

    #[inline]
    fn lap(&self, x: &[f64], i: usize) -> f64 {
        let m = self.grid.params().m();
        let strides = self.grid.strides();
        let c = 2.0 * x[i];
        let mut lx = 0.0;
        for k in 0..m {
            lx += (x[i + strides[k]] - c + x[i - strides[k]]) * self.inv_h2[k];
        }
        let mut ly = 0.0;
        for k in m..self.grid.dim() {
            ly += (x[i + strides[k]] - c + x[i - strides[k]]) * self.inv_h2[k];
        }
        lx + self.coef_y[i] * ly
    }

    fn diag(&self, i: usize) -> f64 {
        let m = self.grid.params().m();
        let sx: f64 = self.inv_h2[..m].iter().sum();
        let sy: f64 = self.inv_h2[m..].iter().sum();
        2.0 * (sx + self.coef_y[i] * sy)
    }

    /// Inverse of `|diag L|` on both blocks, zero off the interior.
    pub fn jacobi(&self) -> Vec<f64> {
        let n = self.nodes();
        (0..2 * n)
            .into_par_iter()
            .map(|j| {
                let i = j % n;
                if self.is_interior(i) {
                    1.0 / self.diag(i)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Visits interior nodes of each axis-0 slab in parallel.
    fn for_interior<F>(&self, out_u: &mut [f64], out_w: &mut [f64], f: F)
    where
        F: Fn(usize) -> (f64, f64) + Sync,
    {
        let g = &self.grid;
        let d = g.dim();
        let slab = g.strides()[0];
        let lo = self.layer + 1;
        out_u
            .par_chunks_mut(slab)
            .zip(out_w.par_chunks_mut(slab))
            .enumerate()
            .for_each(|(i0, (cu, cw))| {
                cu.iter_mut().for_each(|v| *v = 0.0);
                cw.iter_mut().for_each(|v| *v = 0.0);
                if i0 < lo || i0 + lo >= g.nodes()[0] {
                    return;
                }
                let mut multi = [lo; MAX_DIM];
                loop {
                    let local: usize = (1..d).map(|k| multi[k] * g.strides()[k]).sum();
                    let (a, b) = f(i0 * slab + local);
                    cu[local] = a;
                    cw[local] = b;
                    let mut k = d - 1;
                    loop {
                        if k == 0 {
                            return;
                        }
                        multi[k] += 1;
                        if multi[k] + lo < g.nodes()[k] {
                            break;
                        }
                        multi[k] = lo;
                        k -= 1;
                    }
                }
            });
    }

    /// Right-hand side and the boundary-layer part of the solution.
    fn boundary_terms(&self, g_u: &ScalarField, g_w: &ScalarField) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        for (name, g) in [("g_u", g_u), ("g_w", g_w)] {
            if **g.grid() != *self.grid {
                return Err(Error::GridMismatch);
            }
            if g.margin() > self.layer {
                return Err(invalid(format!(
                    "{name} is valid only from margin {}, but the Dirichlet layer sits at margin {}",
                    g.margin(),
                    self.layer
                )));
            }
        }
        let n = self.nodes();
        let layer_only = |g: &ScalarField| -> Vec<f64> {
            (0..n).into_par_iter().map(|i| if self.is_layer(i) { g.get(i) } else { 0.0 }).collect()
        };
        let bu = layer_only(g_u);
        let bw = layer_only(g_w);
        let mut rhs = vec![0.0; 2 * n];
        let (top, bottom) = rhs.split_at_mut(n);
        self.for_interior(top, bottom, |i| (-self.lap(&bw, i), -self.lap(&bu, i)));
        Ok((rhs, bu, bw))
    }
}

impl LinearOperator for DirichletOperator {
    fn len(&self) -> usize {
        2 * self.nodes()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nodes();
        let (xu, xw) = x.split_at(n);
        let (top, bottom) = y.split_at_mut(n);
        self.for_interior(top, bottom, |i| (self.lap(xw, i) - self.v[i] * xu[i], self.lap(xu, i) - xw[i]));
    }
}

/// Solves `Δ_X u = w`, `Δ_X w = V u` with Dirichlet data on the outermost valid layer of `V`.
pub fn solve_bvp(
    label: impl Into<String>,
    v: &ScalarField,
    g_u: &ScalarField,
    g_w: &ScalarField,
    opts: &BvpOptions,
) -> Result<SolutionPair> {
    if !(opts.krylov.tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {}", opts.krylov.tol)));
    }
    if v.data().iter().enumerate().any(|(i, x)| v.is_valid(i) && !x.is_finite()) {
        return Err(invalid("V must be finite on its valid region"));
    }
    let op = dirichlet_operator(v)?;
    let (rhs, bu, bw) = op.boundary_terms(g_u, g_w)?;
    let jac = op.jacobi();
    let mut x = vec![0.0; op.len()];
    let log = krylov::solve(&op, &rhs, &mut x, Some(&jac), &opts.krylov)?;
    let n = op.nodes();
    let grid = v.grid();
    let layer = op.layer;
    let assemble = |block: &[f64], b: &[f64]| -> Result<ScalarField> {
        let data = grid.fill(layer, |i, _| if op.is_interior(i) { block[i] } else { b[i] })?;
        ScalarField::from_data(grid.clone(), data, layer)
    };
    let u = assemble(&x[..n], &bu)?;
    let w = assemble(&x[n..], &bw)?;
    SolutionPair::from_fields(label, u, w, v.clone(), opts.psi_min, Provenance::Solved { log })
}
