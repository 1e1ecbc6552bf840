//! Verifiers for the Hardy, Rellich, pointwise `Zu`, Caccioppoli and Moser estimates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ScalarField;
use crate::ops::{grushin_laplacian, x_gradient_norm2, z_derivative};
use crate::quadrature::{ball_integral, ball_sup, cached_rule, WeightFactor, WeightSpec};
use crate::report::{config, InequalityReport};
use crate::solutions::SolutionPair;

/// Default Caccioppoli radius; the comparison ball has radius `2 r`.
pub const CACCIOPPOLI_RADIUS: f64 = 0.35;

/// Regression bound for the Caccioppoli ratio: twice the largest ratio over
/// the standard fixture corpus on the default grid.
pub const DEFAULT_C_CACC: f64 = 4.956e-4;

/// Default outer radius of the Moser ratio.
pub const MOSER_RADIUS: f64 = 0.7;

fn integral(f: &ScalarField, r: f64, w: WeightSpec) -> Result<f64> {
    Ok(cached_rule(f.grid(), r, w, None)?.integrate(f)?.value)
}

/// The two Hardy-type estimates on `B_r`, with `1/|x|²` and with `1/(ρ² ψ)`.
///
/// Both share the right-hand side
/// `(2/(m−2))² ∫|Xu|² (r²−ρ²)^{α+1} + 4(α+1)/(m−2) ∫u² (r²−ρ²)^α ψ`.
pub fn hardy_check(u: &ScalarField, r: f64, alpha: f64) -> Result<(InequalityReport, InequalityReport)> {
    let grid = u.grid();
    let params = grid.params();
    params.require_m_above_two()?;
    let mm2 = (params.m() - 2) as f64;
    let u2 = u.map(|a| a * a);
    let grad2 = x_gradient_norm2(u)?;
    let grad_term = integral(&grad2, r, WeightSpec::pow_alpha1(alpha)?)?;
    let mass_term = integral(&u2, r, WeightSpec::psi_alpha(alpha)?)?;
    let rhs = (2.0 / mm2).powi(2) * grad_term + 4.0 * (alpha + 1.0) / mm2 * mass_term;
    let lhs_x = integral(&u2, r, WeightSpec::pow_alpha1(alpha)?.with_factor(WeightFactor::InvAbsX2))?;
    let lhs_rho = integral(&u2, r, WeightSpec::pow_alpha1(alpha)?.with_factor(WeightFactor::InvRho2Psi))?;
    let cfg = config(grid, "field", Some(r), Some(alpha));
    let terms = format!("gradient term {grad_term:.6e}, mass term {mass_term:.6e}");
    let a = InequalityReport::new("hardy_abs_x", lhs_x, rhs, 0.0, cfg.clone()).note(terms.clone());
    let mut b = InequalityReport::new("hardy_rho_psi", lhs_rho, rhs, 0.0, cfg).note(terms);
    if params.beta() > 1.0 {
        b = b.note("beta > 1: the rho^2 psi form is only asserted for beta <= 1");
    }
    Ok((a, b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RellichResult {
    /// `∫|Xu|² ρ² (r²−ρ²)^α`
    pub lhs: f64,
    pub rhs: f64,
    /// The three right-hand terms in order.
    pub terms: [f64; 3],
    /// `|lhs − rhs| / max(|lhs|, Σ|terms|)`, zero when both sides vanish.
    pub residual: f64,
}

/// Both sides of
/// `∫|Xu|²ρ²W_α = (Q−2)/(2(α+1)) ∫|Xu|²W_{α+1} + 2∫(Zu)²W_α ψ − 1/(α+1) ∫ Zu Δ_X u W_{α+1}`
/// with `W_γ = (r²−ρ²)^γ`.
pub fn rellich_identity_residual(u: &ScalarField, r: f64, alpha: f64) -> Result<RellichResult> {
    let grid = u.grid();
    let q = grid.params().homogeneous_dimension();
    let grad2 = x_gradient_norm2(u)?;
    let zu = z_derivative(u)?;
    let lap = grushin_laplacian(u)?;
    let lhs = integral(&grad2, r, WeightSpec::pow_alpha(alpha)?.with_factor(WeightFactor::Rho2))?;
    let t1 = (q - 2.0) / (2.0 * (alpha + 1.0)) * integral(&grad2, r, WeightSpec::pow_alpha1(alpha)?)?;
    let t2 = 2.0 * integral(&zu.map(|z| z * z), r, WeightSpec::psi_alpha(alpha)?)?;
    let t3 = -integral(&zu.mul(&lap)?, r, WeightSpec::pow_alpha1(alpha)?)? / (alpha + 1.0);
    let rhs = t1 + t2 + t3;
    let scale = lhs.abs().max(t1.abs() + t2.abs() + t3.abs());
    let residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(RellichResult { lhs, rhs, terms: [t1, t2, t3], residual })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZuCheck {
    /// `max (|Zf| − ρ ψ^{−1/2} |Xf|)` over the sub-mask.
    pub max_violation: f64,
    /// `max ρ ψ^{−1/2} |Xf|` over the sub-mask.
    pub scale: f64,
    pub nodes: usize,
}

/// Pointwise `|Zf| ≤ ρ ψ^{−1/2} |Xf|` on nodes with `ψ ≥ psi_min`.
pub fn zu_pointwise_check(f: &ScalarField, psi_min: f64) -> Result<ZuCheck> {
    if !(psi_min > 0.0 && psi_min <= 1.0) {
        return Err(invalid(format!("psi_min must lie in (0, 1], got {psi_min}")));
    }
    let grid = f.grid();
    let zf = z_derivative(f)?;
    let grad2 = x_gradient_norm2(f)?;
    let (rho, psi) = (grid.rho(), grid.psi());
    let (zd, gd) = (zf.data(), grad2.data());
    let mut out = ZuCheck { max_violation: f64::NEG_INFINITY, scale: 0.0, nodes: 0 };
    for i in zf.valid_indices() {
        if psi[i] < psi_min {
            continue;
        }
        let bound = rho[i] / psi[i].sqrt() * gd[i].sqrt();
        out.max_violation = out.max_violation.max(zd[i].abs() - bound);
        out.scale = out.scale.max(bound);
        out.nodes += 1;
    }
    if out.nodes == 0 {
        return Err(Error::Hypothesis(format!("no valid node with psi >= {psi_min}")));
    }
    Ok(out)
}

/// `R = ‖w‖²_{B_r} r⁴ / ((1 + K1) ‖u‖²_{B_{2r}})` against the bound `c_cacc`.
///
/// A `w` at round-off level counts as zero, so affine `u` gives `R = 0`.
pub fn caccioppoli_check(pair: &SolutionPair, r: f64, c_cacc: f64) -> Result<InequalityReport> {
    let roundoff = pair.w_is_roundoff();
    let w2 = if roundoff { 0.0 } else { integral(&pair.w.map(|a| a * a), r, WeightSpec::plain())? };
    let u2 = integral(&pair.u.map(|a| a * a), 2.0 * r, WeightSpec::plain())?;
    if u2 == 0.0 {
        return Err(Error::Hypothesis(format!("u vanishes on B_{}", 2.0 * r)));
    }
    let ratio = w2 * r.powi(4) / ((1.0 + pair.k1()) * u2);
    let mut rep = InequalityReport::new("caccioppoli", ratio, c_cacc, 0.0, config(pair.grid(), &pair.label, Some(r), None))
        .note(format!("||w||^2 on B_r = {w2:.6e}, ||u||^2 on B_2r = {u2:.6e}, K1 = {}", pair.k1()));
    if roundoff {
        rep = rep.note("w is at round-off level and is treated as zero");
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserResult {
    pub ratio: f64,
    /// `sup |w|` over `B_{R/2}`.
    pub sup: f64,
    pub l2: f64,
    pub ls: f64,
    pub s: f64,
    pub radius: f64,
}

/// `‖w‖_{L∞(B_{R/2})} / (‖w‖_{L²(B_R)} + ‖f‖_{L^s(B_R)})` with unweighted norms.
pub fn moser_ratio(w: &ScalarField, f: &ScalarField, s: f64, radius: f64) -> Result<MoserResult> {
    let q = w.grid().params().homogeneous_dimension();
    if q <= 2.0 {
        return Err(Error::Hypothesis(format!("homogeneous dimension {q} must exceed 2")));
    }
    if !(s > q / 2.0) || !s.is_finite() {
        return Err(Error::Hypothesis(format!("s = {s} must exceed Q/2 = {}", q / 2.0)));
    }
    if **w.grid() != **f.grid() {
        return Err(Error::GridMismatch);
    }
    let sup = ball_sup(w, radius / 2.0)?;
    let l2 = integral(&w.map(|a| a * a), radius, WeightSpec::plain())?.sqrt();
    let ls = integral(&f.map(|a| a.abs().powf(s)), radius, WeightSpec::plain())?.powf(1.0 / s);
    let denom = l2 + ls;
    let ratio = if sup == 0.0 { 0.0 } else { sup / denom };
    Ok(MoserResult { ratio, sup, l2, ls, s, radius })
}

/// [`moser_ratio`] for a pair, with `f = V u`; a round-off `w` counts as zero.
pub fn moser_ratio_pair(pair: &SolutionPair, s: f64, radius: f64) -> Result<MoserResult> {
    let f = pair.v.mul(&pair.u)?;
    if pair.w_is_roundoff() {
        let zero = ScalarField::constant(pair.grid(), 0.0);
        return moser_ratio(&zero, &f.map(|_| 0.0), s, radius);
    }
    moser_ratio(&pair.w, &f, s, radius)
}

/// `(Q + 1)/2`, the exponent used with the Moser ratio.
pub fn moser_exponent(pair: &SolutionPair) -> f64 {
    (pair.grid().params().homogeneous_dimension() + 1.0) / 2.0
}

/// Plain Lebesgue volume of `B_r` as seen by the grid rule.
pub fn ball_volume(field: &ScalarField, r: f64) -> Result<f64> {
    Ok(ball_integral(&ScalarField::constant(field.grid(), 1.0), r, WeightSpec::plain())?.value)
}
