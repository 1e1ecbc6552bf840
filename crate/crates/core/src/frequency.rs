//! Weighted height, energy and frequency of a solution pair, the
//! almost-monotone functional built from them, the three-ball inequality and
//! vanishing-order estimates.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::ops::{grushin_laplacian, x_gradient_norm2, z_derivative};
use crate::quadrature::{ball_sup, cached_rule, default_subdivisions, WeightSpec};
use crate::report::{config, InequalityReport};
use crate::solutions::SolutionPair;

pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_H_FLOOR: f64 = 1e-30;

/// Constants of the monotonicity and three-ball estimates, as functions of `m > 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub m: usize,
    pub m1: f64,
    pub m2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub cbar: f64,
    /// Exponential rate quoted with the monotone functional, `4 M1 + 1`.
    pub c_stmt: f64,
    /// Additive constant quoted with the monotone functional, `2 (m − 2) M2`.
    pub c_prime_stmt: f64,
}

impl ConstantSet {
    pub fn new(m: usize) -> Result<Self> {
        if m <= 2 {
            return Err(Error::Hypothesis(format!("m > 2 required, got m = {m}")));
        }
        let mm2 = (m - 2) as f64;
        let m1 = (2.0 / mm2).powi(2).max(1.0);
        let m2 = (4.0 / mm2.powi(3)).max(1.0);
        let c1 = 32.0 * mm2 * m1 * m2;
        let c2 = 8.0 * m1 + 2.0;
        let c3 = c2 / 2.0;
        let c4 = c1 / c2;
        Ok(Self {
            m,
            m1,
            m2,
            c1,
            c2,
            c3,
            c4,
            c5: c3.exp(),
            c6: 2.0 * c4,
            cbar: (8.0 * m1 + 2.0).exp(),
            c_stmt: 4.0 * m1 + 1.0,
            c_prime_stmt: 2.0 * mm2 * m2,
        })
    }

    /// `(rate, shift)` entering `e^{rate K1 r²}(N + shift K1² (α+1) + K2/(4 rate K1))`.
    pub fn monotone_pair(&self, mode: ConstantMode) -> (f64, f64) {
        match mode {
            ConstantMode::Proof => (self.c3, self.c4),
            ConstantMode::Statement => (self.c_stmt, self.c_prime_stmt),
        }
    }

    /// Three-ball exponent constant, optionally folding in the `K2` term.
    pub fn three_ball_c6(&self, mode: ThreeBallExponent, k1: f64, k2: f64, alpha: f64) -> f64 {
        match mode {
            ThreeBallExponent::Plain => self.c6,
            ThreeBallExponent::FoldK2 => self.c6 + k2 / ((8.0 * self.m1 + 2.0) * k1 * (alpha + 1.0)),
        }
    }

    /// The vanishing-order bound `C · C̄^{K1} · K1²`.
    pub fn vanishing_bound(&self, k1: f64) -> f64 {
        self.c_stmt * self.cbar.powf(k1) * k1 * k1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMode {
    /// `C3 = C2/2`, `C4 = C1/C2`.
    #[default]
    Proof,
    /// `C = 4 M1 + 1`, `C' = 2 (m − 2) M2`.
    Statement,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeBallExponent {
    Plain,
    #[default]
    FoldK2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyConfig {
    pub alpha: f64,
    /// `H(r)` below this multiple of `∫_{B_r} (r²−ρ²)^α ψ` counts as degenerate.
    pub h_floor: f64,
    pub constants: ConstantMode,
    pub three_ball: ThreeBallExponent,
    /// Allowed drop of `M` between consecutive radii, relative to `max |M|`.
    pub monotone_tol: f64,
    pub three_ball_tol: f64,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            h_floor: DEFAULT_H_FLOOR,
            constants: ConstantMode::Proof,
            three_ball: ThreeBallExponent::FoldK2,
            monotone_tol: 1e-3,
            three_ball_tol: 1e-3,
        }
    }
}

impl FrequencyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.h_floor >= 0.0) || !(self.monotone_tol >= 0.0) || !(self.three_ball_tol >= 0.0) {
            return Err(invalid("floors and tolerances must be non-negative"));
        }
        Ok(())
    }
}

/// `n` radii spaced geometrically in `[lo, hi]`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(invalid(format!("need 0 < lo < hi and n >= 2, got ({lo}, {hi}, {n})")));
    }
    let q = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo * (q * i as f64).exp() }).collect())
}

/// Integrands derived once per pair.
pub struct PairFields {
    grid: Arc<Grid>,
    label: String,
    k1: f64,
    k2: f64,
    /// `u² + w²`
    height: ScalarField,
    /// `u²`
    u2: ScalarField,
    /// `|Xu|² + |Xw|² + (1 + V) u w`
    energy: ScalarField,
    /// `u Zu + w Zw`
    energy_alt: ScalarField,
}

impl PairFields {
    pub fn new(pair: &SolutionPair) -> Result<Self> {
        let (u, w, v) = (&pair.u, &pair.w, &pair.v);
        let height = u.zip_map(w, |a, b| a * a + b * b)?;
        let u2 = u.map(|a| a * a);
        let grads = x_gradient_norm2(u)?.add(&x_gradient_norm2(w)?)?;
        let coupling = u.mul(w)?.zip_map(v, |uw, vv| (1.0 + vv) * uw)?;
        let energy = grads.add(&coupling)?;
        let uzu = u.mul(&z_derivative(u)?)?;
        let wzw = w.mul(&z_derivative(w)?)?;
        let energy_alt = uzu.add(&wzw)?;
        Ok(Self { grid: u.grid().clone(), label: pair.label.clone(), k1: pair.k1(), k2: pair.k2(), height, u2, energy, energy_alt })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn integrate(&self, f: &ScalarField, r: f64, w: WeightSpec, subdiv: Option<&[usize]>) -> Result<f64> {
        Ok(cached_rule(&self.grid, r, w, subdiv)?.integrate(f)?.value)
    }

    /// `H(r) = ∫_{B_r} (u² + w²)(r² − ρ²)^α ψ`.
    pub fn height(&self, r: f64, alpha: f64, subdiv: Option<&[usize]>) -> Result<f64> {
        self.integrate(&self.height, r, WeightSpec::psi_alpha(alpha)?, subdiv)
    }

    /// `∫_{B_r} (r² − ρ²)^α ψ`, the height of the constant pair `(1, 0)`.
    pub fn unit_height(&self, r: f64, alpha: f64, subdiv: Option<&[usize]>) -> Result<f64> {
        Ok(cached_rule(&self.grid, r, WeightSpec::psi_alpha(alpha)?, subdiv)?.total_weight())
    }

    /// `I(r) = ∫_{B_r} (|Xu|² + |Xw|² + (1 + V) u w)(r² − ρ²)^{α+1}`.
    pub fn energy(&self, r: f64, alpha: f64, subdiv: Option<&[usize]>) -> Result<f64> {
        self.integrate(&self.energy, r, WeightSpec::pow_alpha1(alpha)?, subdiv)
    }

    /// `2(α+1) ∫_{B_r} (u Zu + w Zw)(r² − ρ²)^α ψ`.
    pub fn energy_alt(&self, r: f64, alpha: f64) -> Result<f64> {
        Ok(2.0 * (alpha + 1.0) * self.integrate(&self.energy_alt, r, WeightSpec::psi_alpha(alpha)?, None)?)
    }

    /// `h(r) = ∫_{B_r} (u² + w²) ψ`.
    pub fn plain_height(&self, r: f64) -> Result<f64> {
        self.integrate(&self.height, r, WeightSpec::psi(), None)
    }

    /// `∫_{B_r} u² ψ`.
    pub fn u_height(&self, r: f64) -> Result<f64> {
        self.integrate(&self.u2, r, WeightSpec::psi(), None)
    }

    /// `N = I/H`, or an error if `H` is below the floor.
    pub fn frequency(&self, r: f64, cfg: &FrequencyConfig) -> Result<f64> {
        let h = self.height(r, cfg.alpha, None)?;
        let floor = cfg.h_floor * self.unit_height(r, cfg.alpha, None)?;
        if h <= floor {
            return Err(Error::DegenerateFrequency { radius: r, height: h });
        }
        Ok(self.energy(r, cfg.alpha, None)? / h)
    }
}

pub fn height_h(pair: &SolutionPair, r: f64, alpha: f64) -> Result<f64> {
    PairFields::new(pair)?.height(r, alpha, None)
}

pub fn energy_i(pair: &SolutionPair, r: f64, alpha: f64) -> Result<f64> {
    PairFields::new(pair)?.energy(r, alpha, None)
}

pub fn energy_i_alt(pair: &SolutionPair, r: f64, alpha: f64) -> Result<f64> {
    PairFields::new(pair)?.energy_alt(r, alpha)
}

pub fn plain_height_h(pair: &SolutionPair, r: f64) -> Result<f64> {
    PairFields::new(pair)?.plain_height(r)
}

pub fn frequency_n(pair: &SolutionPair, r: f64, cfg: &FrequencyConfig) -> Result<f64> {
    PairFields::new(pair)?.frequency(r, cfg)
}

/// Centred-difference `H′(r)` against `(2α + Q)/r · H + I/((α+1) r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPrimeCheck {
    pub r: f64,
    pub dr: f64,
    /// `H(r) · (log H(r+dr) − log H(r−dr)) / (2 dr)`
    pub numeric: f64,
    /// `(H(r+dr) − H(r−dr)) / (2 dr)`
    pub numeric_plain: f64,
    pub formula: f64,
    /// `|numeric − formula| / |formula|`; zero when degenerate.
    pub residual: f64,
    pub residual_plain: f64,
    pub degenerate: bool,
}

fn h_prime_parts(fields: &PairFields, alpha: f64, r: f64, dr: f64, sub: &[usize]) -> Result<(f64, f64, f64)> {
    let h_minus = fields.height(r - dr, alpha, Some(sub))?;
    let h_plus = fields.height(r + dr, alpha, Some(sub))?;
    let h = fields.height(r, alpha, Some(sub))?;
    let plain = (h_plus - h_minus) / (2.0 * dr);
    let log = if h_minus > 0.0 && h_plus > 0.0 { h * (h_plus.ln() - h_minus.ln()) / (2.0 * dr) } else { plain };
    Ok((h, log, plain))
}

/// Both differences are second order in `dr`; the logarithmic one has a far
/// smaller constant because `H` grows like `r^{2α+Q}`. The sub-lattice is
/// frozen at the one for `r − dr` so all heights come from one rule family.
pub fn h_prime_identity_check(fields: &PairFields, alpha: f64, r: f64, dr: f64, cfg: &FrequencyConfig) -> Result<HPrimeCheck> {
    if !(dr > 0.0 && dr < r) {
        return Err(invalid(format!("need 0 < dr < r, got dr = {dr}, r = {r}")));
    }
    let sub = default_subdivisions(&fields.grid, r - dr);
    let (h, numeric, numeric_plain) = h_prime_parts(fields, alpha, r, dr, &sub)?;
    let i = fields.energy(r, alpha, Some(&sub))?;
    let q = fields.grid.params().homogeneous_dimension();
    let formula = (2.0 * alpha + q) / r * h + i / ((alpha + 1.0) * r);
    let floor = cfg.h_floor * fields.unit_height(r, alpha, Some(&sub))?;
    let degenerate = h <= floor;
    let rel = |x: f64| if degenerate { 0.0 } else { (x - formula).abs() / formula.abs() };
    Ok(HPrimeCheck { r, dr, numeric, numeric_plain, formula, residual: rel(numeric), residual_plain: rel(numeric_plain), degenerate })
}

/// Observed order in `dr` of the logarithmic difference, from steps `dr`, `dr/2`, `dr/4`.
pub fn h_prime_observed_order(fields: &PairFields, alpha: f64, r: f64, dr: f64) -> Result<f64> {
    if !(dr > 0.0 && dr < r) {
        return Err(invalid(format!("need 0 < dr < r, got dr = {dr}, r = {r}")));
    }
    let sub = default_subdivisions(&fields.grid, r - dr);
    let d: Vec<f64> =
        [dr, dr / 2.0, dr / 4.0].iter().map(|&s| h_prime_parts(fields, alpha, r, s, &sub).map(|p| p.1)).collect::<Result<_>>()?;
    Ok(((d[0] - d[1]) / (d[1] - d[2])).abs().log2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub r: f64,
    #[serde(rename = "H")]
    pub height: f64,
    #[serde(rename = "I")]
    pub energy: f64,
    #[serde(rename = "I_alt")]
    pub energy_alt: f64,
    #[serde(rename = "N")]
    pub frequency: Option<f64>,
    pub h: f64,
    #[serde(rename = "M")]
    pub monotone: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneVerdict {
    pub pass: bool,
    /// Largest drop `M(r_i) − M(r_{i+1})` over consecutive non-degenerate radii, or 0.
    pub max_violation: f64,
    pub max_abs_m: f64,
    pub tol: f64,
    pub degenerate_radii: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub label: String,
    pub alpha: f64,
    pub k1: f64,
    pub k2: f64,
    pub constants: ConstantSet,
    pub mode: ConstantMode,
    pub rows: Vec<FrequencyRow>,
    pub verdict: MonotoneVerdict,
}

impl FrequencyProfile {
    pub const CSV_HEADER: &'static str = "r,H,I,I_alt,N,h,M";

    /// One row per radius; degenerate entries are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for row in &self.rows {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{}",
                row.r,
                row.height,
                row.energy,
                row.energy_alt,
                opt(row.frequency),
                row.h,
                opt(row.monotone)
            )
            .expect("string write");
        }
        out
    }
}

/// Computes `H, I, I_alt, N, h, M` on every radius and judges monotonicity of `M`.
pub fn monotonicity_profile(fields: &PairFields, radii: &[f64], cfg: &FrequencyConfig) -> Result<FrequencyProfile> {
    cfg.validate()?;
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::RadiusOrdering("radii must be non-empty and strictly ascending".into()));
    }
    let consts = ConstantSet::new(fields.grid.params().m())?;
    let (rate, shift) = consts.monotone_pair(cfg.constants);
    let (k1, k2, alpha) = (fields.k1, fields.k2, cfg.alpha);
    let rows = radii
        .par_iter()
        .map(|&r| -> Result<FrequencyRow> {
            let height = fields.height(r, alpha, None)?;
            let energy = fields.energy(r, alpha, None)?;
            let energy_alt = fields.energy_alt(r, alpha)?;
            let h = fields.plain_height(r)?;
            let floor = cfg.h_floor * fields.unit_height(r, alpha, None)?;
            let frequency = (height > floor).then(|| energy / height);
            let monotone = frequency
                .map(|n| (rate * k1 * r * r).exp() * (n + shift * k1 * k1 * (alpha + 1.0) + k2 / (4.0 * rate * k1)));
            Ok(FrequencyRow { r, height, energy, energy_alt, frequency, h, monotone })
        })
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = rows.iter().filter_map(|r| r.monotone).collect();
    let max_abs_m = ms.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let max_violation = ms.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
    let tol = cfg.monotone_tol * max_abs_m;
    let verdict = MonotoneVerdict {
        pass: max_violation <= tol,
        max_violation,
        max_abs_m,
        tol: cfg.monotone_tol,
        degenerate_radii: rows.len() - ms.len(),
    };
    Ok(FrequencyProfile {
        label: fields.label.clone(),
        alpha,
        k1,
        k2,
        constants: consts,
        mode: cfg.constants,
        rows,
        verdict,
    })
}

/// `α0 = log(r3/(2 r2))` and `log β0 = 2 K1 C3 + log log(2 r2 / r1)`.
pub fn three_ball_exponents(consts: &ConstantSet, k1: f64, r1: f64, r2: f64, r3: f64) -> Result<(f64, f64)> {
    if !(0.0 < r1 && r1 < r2 && 2.0 * r2 < r3) {
        return Err(Error::RadiusOrdering(format!("need 0 < r1 < r2 < 2 r2 < r3, got ({r1}, {r2}, {r3})")));
    }
    let alpha0 = (r3 / (2.0 * r2)).ln();
    let log_beta0 = 2.0 * k1 * consts.c5.ln() + (2.0 * r2 / r1).ln().ln();
    Ok((alpha0, log_beta0))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `h(r2) ≤ (r3/(2 r2))^{C6 K1²} h(r3)^{β0/(α0+β0)} h(r1)^{α0/(α0+β0)}`, evaluated in log space.
pub fn three_ball_check(fields: &PairFields, r1: f64, r2: f64, r3: f64, cfg: &FrequencyConfig) -> Result<InequalityReport> {
    let consts = ConstantSet::new(fields.grid.params().m())?;
    let (k1, k2) = (fields.k1, fields.k2);
    let (alpha0, log_beta0) = three_ball_exponents(&consts, k1, r1, r2, r3)?;
    let c6 = consts.three_ball_c6(cfg.three_ball, k1, k2, cfg.alpha);
    let (h1, h2, h3) = (fields.plain_height(r1)?, fields.plain_height(r2)?, fields.plain_height(r3)?);
    // weights α0/(α0+β0) and β0/(α0+β0) via q = β0/α0
    let ln_q = log_beta0 - alpha0.ln();
    let w1 = (-softplus(ln_q)).exp();
    let w3 = (-softplus(-ln_q)).exp();
    let log_rhs = c6 * k1 * k1 * alpha0 + w3 * h3.ln() + w1 * h1.ln();
    let mut notes = Vec::new();
    let rhs = if h1 <= 0.0 || h3 <= 0.0 {
        0.0
    } else if log_rhs > f64::MAX.ln() {
        notes.push(format!("rhs overflows f64 (log rhs = {log_rhs:.3e}); reported as f64::MAX"));
        f64::MAX
    } else {
        log_rhs.exp()
    };
    let mut rep = InequalityReport::new("three_ball", h2, rhs, cfg.three_ball_tol, config(&fields.grid, &fields.label, Some(r2), Some(cfg.alpha)));
    rep.notes = notes;
    Ok(rep
        .note(format!("r1 = {r1}, r2 = {r2}, r3 = {r3}"))
        .note(format!("alpha0 = {alpha0:.6e}, log beta0 = {log_beta0:.6e}, C6 = {c6:.6e}, K1 = {k1}, K2 = {k2}"))
        .note(format!("h(r1) = {h1:.6e}, h(r3) = {h3:.6e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingFit {
    pub radii: Vec<f64>,
    /// `∫_{B_r} u² ψ` per radius.
    pub heights: Vec<f64>,
    /// Least-squares slope of `log h` against `log r`.
    pub slope: f64,
    /// `(slope − Q)/2`.
    pub order_estimate: f64,
    /// The computed analogue of `h(1/3)`.
    pub h_third: f64,
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const VANISHING_RADII: (f64, f64, usize) = (0.3, 0.9, 7);

pub fn default_vanishing_radii() -> Vec<f64> {
    geometric_radii(VANISHING_RADII.0, VANISHING_RADII.1, VANISHING_RADII.2).expect("valid constants")
}

/// Log-log fit of `∫_{B_r} u² ψ`; for `u ∼ ρ^κ` the slope is `2κ + Q`.
pub fn vanishing_order_fit(fields: &PairFields, radii: &[f64], cfg: &FrequencyConfig) -> Result<VanishingFit> {
    if radii.len() < 5 {
        return Err(invalid(format!("need at least 5 radii, got {}", radii.len())));
    }
    let heights = radii.iter().map(|&r| fields.u_height(r)).collect::<Result<Vec<_>>>()?;
    for (&r, &h) in radii.iter().zip(&heights) {
        let unit = cached_rule(&fields.grid, r, WeightSpec::psi(), None)?.total_weight();
        if h <= cfg.h_floor * unit {
            return Err(Error::DegenerateFrequency { radius: r, height: h });
        }
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = heights.iter().map(|h| h.ln()).collect();
    let slope = lsq_slope(&xs, &ys);
    let q = fields.grid.params().homogeneous_dimension();
    let h_third = fields.u_height(1.0 / 3.0)?;
    Ok(VanishingFit { radii: radii.to_vec(), heights, slope, order_estimate: (slope - q) / 2.0, h_third })
}

/// Fits `log ‖u‖_{L∞(B_r)}` against `log r` and compares the exponent with `C · C̄^{K1} · K1²`.
pub fn sup_bound_check(pair: &SolutionPair, radii: &[f64]) -> Result<InequalityReport> {
    if radii.len() < 2 {
        return Err(invalid("need at least 2 radii"));
    }
    let sups = radii.iter().map(|&r| ball_sup(&pair.u, r)).collect::<Result<Vec<_>>>()?;
    if sups.iter().all(|&s| s == 0.0) {
        return Err(Error::Hypothesis("u vanishes identically on the sampled balls".into()));
    }
    let consts = ConstantSet::new(pair.grid().params().m())?;
    let bound = consts.vanishing_bound(pair.k1());
    let mut rep = if sups.iter().any(|&s| s == 0.0) {
        InequalityReport::new("sup_bound", f64::INFINITY, bound, 0.0, config(pair.grid(), &pair.label, None, None))
            .note("u vanishes on some sampled ball")
    } else {
        let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
        InequalityReport::new("sup_bound", lsq_slope(&xs, &ys), bound, 0.0, config(pair.grid(), &pair.label, None, None))
    };
    rep.notes.push(format!("K1 = {}, sup |u| per radius = {:?}", pair.k1(), sups));
    Ok(rep)
}

/// `(u, w) = (ρ², Δ_X ρ²)` evaluated pointwise, for quick checks.
pub fn rho_squared_fields(grid: &Arc<Grid>) -> Result<(ScalarField, ScalarField)> {
    let u = ScalarField::rho(grid).map(|r| r * r);
    let w = grushin_laplacian(&u)?;
    Ok((u, w))
}
