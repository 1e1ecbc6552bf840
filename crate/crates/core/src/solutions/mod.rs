//! Discrete solution triples `(u, w, V)` of `Δ_X u = w`, `Δ_X w = V u`.

mod bvp;
pub mod krylov;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use bvp::{dirichlet_operator, solve_bvp, BvpOptions};
pub use krylov::{KrylovLog, KrylovMethod, KrylovOptions};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::ops::{grushin_laplacian, z_derivative};

/// Relative residual bound for a pair to count as a solution.
pub const CERTIFY_TOL: f64 = 1e-6;
pub const DEFAULT_PSI_MIN: f64 = 1e-2;
const ROUNDOFF_FACTOR: f64 = 64.0;

/// Bounds `K1 ≥ sup|V|` and `K2 ≥ sup |ZV|/ψ` on `B_1`, with their raw values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    pub k1: f64,
    pub k2: f64,
    pub k1_raw: f64,
    pub k2_raw: f64,
    pub k1_clamped: bool,
    pub k2_clamped: bool,
    pub psi_min: f64,
    /// Fraction of `B_1` nodes (where `ZV` is defined) with `ψ ≥ psi_min`.
    pub coverage: f64,
    /// `max (|ZV| − K2 ψ)` over every `B_1` node, clipped at 0.
    pub post_hoc_violation: f64,
}

/// Where a pair came from, kept for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Manufactured,
    Solved { log: KrylovLog },
    Profile { kappa: f64 },
    Loaded,
}

#[derive(Clone, Debug)]
pub struct SolutionPair {
    pub label: String,
    pub u: ScalarField,
    pub w: ScalarField,
    pub v: ScalarField,
    /// `max |Δ_X u − w|`
    pub residual_1: f64,
    /// `max |Δ_X w − V u|`
    pub residual_2: f64,
    /// Scale against which the residuals are judged.
    pub residual_scale: f64,
    pub k: KEstimate,
    pub provenance: Provenance,
}

impl SolutionPair {
    /// Assembles a pair, computing residuals and `K` estimates.
    pub fn from_fields(
        label: impl Into<String>,
        u: ScalarField,
        w: ScalarField,
        v: ScalarField,
        psi_min: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if **u.grid() != **w.grid() || **u.grid() != **v.grid() {
            return Err(Error::GridMismatch);
        }
        let (residual_1, residual_2, residual_scale) = residuals(&u, &w, &v)?;
        let k = estimate_k(&v, psi_min)?;
        Ok(Self { label: label.into(), u, w, v, residual_1, residual_2, residual_scale, k, provenance })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn k1(&self) -> f64 {
        self.k.k1
    }

    pub fn k2(&self) -> f64 {
        self.k.k2
    }

    /// Both residuals below [`CERTIFY_TOL`] times the residual scale.
    pub fn certified(&self) -> bool {
        let bound = CERTIFY_TOL * self.residual_scale;
        self.residual_1 <= bound && self.residual_2 <= bound
    }

    /// `w` is indistinguishable from zero at the working precision of the stencil.
    pub fn w_is_roundoff(&self) -> bool {
        self.w.max_abs() <= ROUNDOFF_FACTOR * f64::EPSILON * self.residual_scale
    }

    /// `(λu, λw, V)`, still a solution.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::from_fields(
            self.label.clone(),
            self.u.scale(lambda),
            self.w.scale(lambda),
            self.v.clone(),
            self.k.psi_min,
            self.provenance.clone(),
        )
    }
}

/// Max-norm of the discrete operator, `Σ_k 4/h_k²` with the `y` part weighted by `max |x|^{2β}`.
pub fn operator_norm(grid: &Grid) -> f64 {
    let m = grid.params().m();
    let kern = grid.kernel();
    let xmax2 = grid.x2().iter().copied().fold(0.0, f64::max);
    grid.spacing()
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let c = if k < m { 1.0 } else { kern.abs_x_pow_2beta(xmax2) };
            4.0 * c / (h * h)
        })
        .sum()
}

fn residuals(u: &ScalarField, w: &ScalarField, v: &ScalarField) -> Result<(f64, f64, f64)> {
    let lu = grushin_laplacian(u)?;
    let lw = grushin_laplacian(w)?;
    let r1 = lu.sub(w)?.max_abs();
    let vu = v.mul(u)?;
    let r2 = lw.sub(&vu)?.max_abs();
    let scale = operator_norm(u.grid()) * u.max_abs().max(w.max_abs()) + v.max_abs() * u.max_abs();
    Ok((r1, r2, scale))
}

/// Estimates `K1`, `K2` on `B_1 ∩ mask`, clamping both below by 1.
pub fn estimate_k(v: &ScalarField, psi_min: f64) -> Result<KEstimate> {
    if !(psi_min > 0.0 && psi_min <= 1.0) {
        return Err(invalid(format!("psi_min must lie in (0, 1], got {psi_min}")));
    }
    let grid = v.grid();
    let rho = grid.rho();
    let psi = grid.psi();
    let k1_raw = v
        .max_abs_where(|i| rho[i] < 1.0)
        .ok_or_else(|| Error::Hypothesis("no valid node of V inside B_1".into()))?;
    let zv = z_derivative(v)?;
    let total = zv.valid_indices().into_iter().filter(|&i| rho[i] < 1.0).count();
    if total == 0 {
        return Err(Error::Hypothesis("no valid node of ZV inside B_1".into()));
    }
    let ratio = zv.zip_map(&ScalarField::psi(grid), |z, p| z / p)?;
    let covered = ratio.valid_indices().into_iter().filter(|&i| rho[i] < 1.0 && psi[i] >= psi_min).count();
    let k2_raw = ratio.max_abs_where(|i| rho[i] < 1.0 && psi[i] >= psi_min).unwrap_or(0.0);
    let k1 = k1_raw.max(1.0);
    let k2 = k2_raw.max(1.0);
    let zd = zv.data();
    let post_hoc_violation = zv
        .valid_indices()
        .into_iter()
        .filter(|&i| rho[i] < 1.0)
        .map(|i| zd[i].abs() - k2 * psi[i])
        .fold(0.0, f64::max);
    Ok(KEstimate {
        k1,
        k2,
        k1_raw,
        k2_raw,
        k1_clamped: k1_raw < 1.0,
        k2_clamped: k2_raw < 1.0,
        psi_min,
        coverage: covered as f64 / total as f64,
        post_hoc_violation,
    })
}

/// Chooses `u`, sets `w = Δ_X u` and `V = Δ_X w / u` with the discrete operator.
pub fn manufacture<F>(label: impl Into<String>, u_fn: F, grid: &Arc<Grid>, u_min: f64) -> Result<SolutionPair>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    manufacture_field(label, ScalarField::sample(grid, u_fn)?, u_min)
}

/// [`manufacture`] from an already sampled `u`.
pub fn manufacture_field(label: impl Into<String>, u: ScalarField, u_min: f64) -> Result<SolutionPair> {
    if !(u_min > 0.0) {
        return Err(invalid(format!("u_min must be positive, got {u_min}")));
    }
    if let Some((node, &value)) =
        u.data().iter().enumerate().find(|&(i, val)| u.is_valid(i) && !(val.abs() >= u_min))
    {
        return Err(Error::DivisionHazard { node, value, u_min });
    }
    let w = grushin_laplacian(&u)?;
    let lw = grushin_laplacian(&w)?;
    let v = lw.zip_map(&u, |a, b| a / b)?;
    SolutionPair::from_fields(label, u, w, v, DEFAULT_PSI_MIN, Provenance::Manufactured)
}

/// Samples `ρ^κ`; `κ = 0` gives the constant 1.
pub fn homogeneous_profile(kappa: f64, grid: &Arc<Grid>) -> Result<ScalarField> {
    if !(kappa == 0.0 || kappa >= 2.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be 0 or at least 2, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok(ScalarField::constant(grid, 1.0));
    }
    Ok(ScalarField::rho(grid).map(|r| r.powf(kappa)))
}

/// `(ρ^κ, Δ_X ρ^κ, V = 0)`: a decay-rate fixture that does not solve the system.
pub fn homogeneous_pair(kappa: f64, grid: &Arc<Grid>) -> Result<SolutionPair> {
    let u = homogeneous_profile(kappa, grid)?;
    let w = grushin_laplacian(&u)?;
    let v = ScalarField::constant(grid, 0.0);
    SolutionPair::from_fields(format!("rho^{kappa}"), u, w, v, DEFAULT_PSI_MIN, Provenance::Profile { kappa })
}
