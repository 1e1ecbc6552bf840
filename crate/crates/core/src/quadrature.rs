//! Weighted integrals over pseudo-balls `B_r = {ρ < r}`.
//!
//! A [`BallRule`] stores, for every cell that meets `B_r`, the weighted
//! moments `∫ w`, `∫ w t_k` and `∫ w t_k t_l` with `t = (z - c)/h` over the
//! part of the cell inside the ball, computed on a sub-lattice with the
//! weight evaluated exactly. Applying the rule to a field integrates the
//! quadratic reconstruction built from centred first, second and mixed
//! differences at the cell centre, so the stencil only reaches the 3^d
//! neighbourhood of each cell.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{sq_norm, GaugeKernel, GrushinParams};
use crate::grid::{Grid, ScalarField, MAX_DIM};
use crate::reduce::det_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Plain,
    Psi,
    /// `ψ (r² − ρ²)^α`
    PsiAlpha,
    /// `(r² − ρ²)^α`
    PowAlpha,
    /// `(r² − ρ²)^{α+1}`
    PowAlpha1,
}

/// Extra pointwise factor multiplying the weight; singular ones are evaluated
/// exactly at sub-lattice points, which never lie on `{x = 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFactor {
    One,
    InvAbsX2,
    InvRho2Psi,
    Rho2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub alpha: f64,
    pub factor: WeightFactor,
}

impl WeightSpec {
    pub fn new(kind: WeightKind, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self { kind, alpha, factor: WeightFactor::One })
    }

    pub fn plain() -> Self {
        Self { kind: WeightKind::Plain, alpha: 0.0, factor: WeightFactor::One }
    }

    pub fn psi() -> Self {
        Self { kind: WeightKind::Psi, alpha: 0.0, factor: WeightFactor::One }
    }

    pub fn psi_alpha(alpha: f64) -> Result<Self> {
        Self::new(WeightKind::PsiAlpha, alpha)
    }

    pub fn pow_alpha(alpha: f64) -> Result<Self> {
        Self::new(WeightKind::PowAlpha, alpha)
    }

    pub fn pow_alpha1(alpha: f64) -> Result<Self> {
        Self::new(WeightKind::PowAlpha1, alpha)
    }

    pub fn with_factor(mut self, factor: WeightFactor) -> Self {
        self.factor = factor;
        self
    }

    /// Weight at a point inside `B_r`, from `r²`, `|x|²`, `ρ²` and `ψ`.
    #[inline]
    pub fn eval(&self, r2: f64, x2: f64, rho2: f64, psi: f64, beta: f64) -> f64 {
        let t = (r2 - rho2).max(0.0);
        let base = match self.kind {
            WeightKind::Plain => 1.0,
            WeightKind::Psi => psi,
            WeightKind::PsiAlpha => psi * pow(t, self.alpha),
            WeightKind::PowAlpha => pow(t, self.alpha),
            WeightKind::PowAlpha1 => pow(t, self.alpha + 1.0),
        };
        let factor = match self.factor {
            WeightFactor::One => 1.0,
            WeightFactor::InvAbsX2 => 1.0 / x2,
            // ρ²ψ = ρ^{2-2β} |x|^{2β}
            WeightFactor::InvRho2Psi => 1.0 / (rho2.powf(1.0 - beta) * x2.powf(beta)),
            WeightFactor::Rho2 => rho2,
        };
        base * factor
    }

    fn key(&self) -> (WeightKind, u64, WeightFactor) {
        (self.kind, self.alpha.to_bits(), self.factor)
    }
}

#[inline]
fn pow(t: f64, a: f64) -> f64 {
    if a == a.trunc() && a.abs() < 64.0 {
        t.powi(a as i32)
    } else {
        t.powf(a)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub stderr: f64,
    pub cells_used: usize,
    pub boundary_cells_subsampled: usize,
}

const MAX_SUBDIV: usize = 401;

/// Half-widths of the coordinate bounding box of `B_r`.
pub fn ball_half_widths(params: &GrushinParams, r: f64) -> Vec<f64> {
    let b1 = params.beta() + 1.0;
    let hy = r.powf(b1) / b1;
    (0..params.dim()).map(|k| if k < params.m() { r } else { hy }).collect()
}

/// Default odd sub-lattice size per axis for a ball of radius `r`.
pub fn default_subdivisions(grid: &Grid, r: f64) -> Vec<usize> {
    ball_half_widths(grid.params(), r)
        .iter()
        .zip(grid.spacing())
        .map(|(hw, h)| {
            let s = ((6.0 * h / hw).ceil() as usize).clamp(3, MAX_SUBDIV);
            s | 1
        })
        .collect()
}

/// Precomputed weighted moments of `B_r` on a grid.
#[derive(Debug)]
pub struct BallRule {
    grid: Arc<Grid>,
    radius: f64,
    weight: WeightSpec,
    subdiv: Vec<usize>,
    cells: Vec<usize>,
    m0: Vec<f64>,
    m1: Vec<f64>,
    /// `∫ w t_k t_l` per cell for `k <= l`, packed row by row.
    m2: Vec<f64>,
    boundary_cells: usize,
    edge_room: usize,
}

struct CellMoments {
    idx: usize,
    m0: f64,
    m1: [f64; MAX_DIM],
    m2: [f64; MAX_PAIRS],
    straddles: bool,
}

const MAX_PAIRS: usize = MAX_DIM * (MAX_DIM + 1) / 2;

impl BallRule {
    pub fn new(grid: &Arc<Grid>, r: f64, weight: WeightSpec) -> Result<Self> {
        let subdiv = default_subdivisions(grid, r);
        Self::with_subdivisions(grid, r, weight, &subdiv)
    }

    /// Builds a rule with an explicit sub-lattice, e.g. to keep it fixed while varying `r`.
    pub fn with_subdivisions(grid: &Arc<Grid>, r: f64, weight: WeightSpec, subdiv: &[usize]) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveRadius(r));
        }
        let d = grid.dim();
        if subdiv.len() != d || subdiv.iter().any(|&s| s == 0 || s % 2 == 0 || s > MAX_SUBDIV) {
            return Err(invalid(format!("sub-lattice sizes must be odd and at most {MAX_SUBDIV}")));
        }
        let params = *grid.params();
        let m = params.m();
        let hw = ball_half_widths(&params, r);
        let spec = grid.spec();
        let h = grid.spacing();
        let mut ranges = Vec::with_capacity(d);
        for k in 0..d {
            if spec.lower[k] > -hw[k] || spec.upper[k] < hw[k] {
                return Err(Error::BallOutsideMask { radius: r });
            }
            let axis = grid.axis(k);
            let lo = axis.iter().position(|&c| c + 0.5 * h[k] > -hw[k]).unwrap_or(0);
            let hi = axis.iter().rposition(|&c| c - 0.5 * h[k] < hw[k]).unwrap_or(axis.len() - 1);
            ranges.push((lo, hi));
        }
        let mut edge_room = usize::MAX;
        for (k, &(lo, hi)) in ranges.iter().enumerate() {
            edge_room = edge_room.min(lo).min(grid.nodes()[k] - 1 - hi);
        }

        let mut candidates = Vec::new();
        let mut multi = [0usize; MAX_DIM];
        for k in 0..d {
            multi[k] = ranges[k].0;
        }
        'outer: loop {
            candidates.push(grid.encode(&multi[..d]));
            let mut k = d;
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                multi[k] += 1;
                if multi[k] <= ranges[k].1 {
                    break;
                }
                multi[k] = ranges[k].0;
            }
        }

        let offsets: Vec<Vec<f64>> =
            subdiv.iter().map(|&s| (0..s).map(|j| (j as f64 + 0.5) / s as f64 - 0.5).collect()).collect();
        let kern = params.kernel();
        let r2 = r * r;
        let beta = params.beta();
        let sub_vol = grid.cell_volume() / subdiv.iter().product::<usize>() as f64;

        let moments: Vec<CellMoments> = candidates
            .par_iter()
            .filter_map(|&idx| {
                let mut centre = [0.0; MAX_DIM];
                grid.node_coords(idx, &mut centre[..d]);
                let (rho_min, rho_max) = cell_rho_range(&kern, &centre[..d], h, m);
                if rho_min >= r {
                    return None;
                }
                let mut m0 = 0.0;
                let mut m1 = [0.0; MAX_DIM];
                let mut m2 = [0.0; MAX_PAIRS];
                let mut inside = 0usize;
                let mut sub = [0usize; MAX_DIM];
                let mut p = [0.0; MAX_DIM];
                loop {
                    for k in 0..d {
                        p[k] = centre[k] + offsets[k][sub[k]] * h[k];
                    }
                    let x2 = sq_norm(&p[..m]);
                    let y2 = sq_norm(&p[m..d]);
                    let rho2 = kern.rho2(x2, y2);
                    if rho2 < r2 {
                        let w = weight.eval(r2, x2, rho2, kern.psi(x2, rho2), beta);
                        m0 += w;
                        let mut q = 0;
                        for k in 0..d {
                            let tk = offsets[k][sub[k]];
                            m1[k] += w * tk;
                            for l in k..d {
                                m2[q] += w * tk * offsets[l][sub[l]];
                                q += 1;
                            }
                        }
                        inside += 1;
                    }
                    let mut k = d;
                    loop {
                        if k == 0 {
                            if inside == 0 {
                                return None;
                            }
                            for v in m1.iter_mut().chain(m2.iter_mut()) {
                                *v *= sub_vol;
                            }
                            return Some(CellMoments { idx, m0: m0 * sub_vol, m1, m2, straddles: rho_max >= r });
                        }
                        k -= 1;
                        sub[k] += 1;
                        if sub[k] < subdiv[k] {
                            break;
                        }
                        sub[k] = 0;
                    }
                }
            })
            .collect();

        let mut cells = Vec::with_capacity(moments.len());
        let mut m0 = Vec::with_capacity(moments.len());
        let mut m1 = Vec::with_capacity(moments.len() * d);
        let pairs = d * (d + 1) / 2;
        let mut m2 = Vec::with_capacity(moments.len() * pairs);
        let mut boundary_cells = 0;
        for c in &moments {
            cells.push(c.idx);
            m0.push(c.m0);
            m1.extend_from_slice(&c.m1[..d]);
            m2.extend_from_slice(&c.m2[..pairs]);
            boundary_cells += c.straddles as usize;
        }
        Ok(Self { grid: grid.clone(), radius: r, weight, subdiv: subdiv.to_vec(), cells, m0, m1, m2, boundary_cells, edge_room })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn subdivisions(&self) -> &[usize] {
        &self.subdiv
    }

    pub fn cells_used(&self) -> usize {
        self.cells.len()
    }

    /// `∫_{B_r} w`, the rule applied to the constant 1.
    pub fn total_weight(&self) -> f64 {
        det_sum(self.m0.len(), |c| self.m0[c])
    }

    fn check_field(&self, f: &ScalarField) -> Result<()> {
        if **f.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        if f.margin() + 1 > self.edge_room {
            return Err(Error::BallOutsideMask { radius: self.radius });
        }
        Ok(())
    }

    pub fn integrate(&self, f: &ScalarField) -> Result<QuadratureResult> {
        self.check_field(f)?;
        let d = self.grid.dim();
        let strides = self.grid.strides();
        let v = f.data();
        let pairs = d * (d + 1) / 2;
        let value = det_sum(self.cells.len(), |c| {
            let i = self.cells[c];
            let m2 = &self.m2[c * pairs..(c + 1) * pairs];
            let mut acc = v[i] * self.m0[c];
            let mut q = 0;
            for k in 0..d {
                let s = strides[k];
                acc += 0.5 * (v[i + s] - v[i - s]) * self.m1[c * d + k];
                acc += 0.5 * (v[i + s] - 2.0 * v[i] + v[i - s]) * m2[q];
                q += 1;
                for &t in &strides[k + 1..d] {
                    let mixed = 0.25 * (v[i + s + t] - v[i + s - t] - v[i - s + t] + v[i - s - t]);
                    acc += mixed * m2[q];
                    q += 1;
                }
            }
            acc
        });
        Ok(QuadratureResult {
            value,
            stderr: 0.0,
            cells_used: self.cells.len(),
            boundary_cells_subsampled: self.boundary_cells,
        })
    }
}

fn cell_rho_range(kern: &GaugeKernel, centre: &[f64], h: &[f64], m: usize) -> (f64, f64) {
    let mut near = [0.0; 2];
    let mut far = [0.0; 2];
    for (k, (&c, &hk)) in centre.iter().zip(h).enumerate() {
        let (a, b) = (c - 0.5 * hk, c + 0.5 * hk);
        let lo = if a > 0.0 {
            a
        } else if b < 0.0 {
            -b
        } else {
            0.0
        };
        let hi = a.abs().max(b.abs());
        let block = (k >= m) as usize;
        near[block] += lo * lo;
        far[block] += hi * hi;
    }
    (kern.rho(near[0], near[1]), kern.rho(far[0], far[1]))
}

type RuleKey = (usize, u64, (WeightKind, u64, WeightFactor), Vec<usize>);

fn rule_cache() -> &'static Mutex<HashMap<RuleKey, Arc<BallRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<BallRule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

const CACHE_LIMIT: usize = 512;

/// Returns a shared rule, building it on first use.
///
/// Entries are keyed by grid address, so a rule is reused only while its
/// grid is alive (the rule holds an `Arc` to it).
pub fn cached_rule(grid: &Arc<Grid>, r: f64, weight: WeightSpec, subdiv: Option<&[usize]>) -> Result<Arc<BallRule>> {
    let subdiv = subdiv.map(<[usize]>::to_vec).unwrap_or_else(|| default_subdivisions(grid, r));
    let key = (Arc::as_ptr(grid) as usize, r.to_bits(), weight.key(), subdiv.clone());
    if let Some(rule) = rule_cache().lock().expect("rule cache poisoned").get(&key) {
        if Arc::ptr_eq(&rule.grid, grid) {
            return Ok(rule.clone());
        }
    }
    let rule = Arc::new(BallRule::with_subdivisions(grid, r, weight, &subdiv)?);
    let mut cache = rule_cache().lock().expect("rule cache poisoned");
    if cache.len() >= CACHE_LIMIT {
        cache.clear();
    }
    cache.insert(key, rule.clone());
    Ok(rule)
}

/// Drops every cached rule (and the grids they keep alive).
pub fn clear_rule_cache() {
    rule_cache().lock().expect("rule cache poisoned").clear();
}

/// `∫_{B_r} f w` on the grid.
pub fn ball_integral(f: &ScalarField, r: f64, w: WeightSpec) -> Result<QuadratureResult> {
    cached_rule(f.grid(), r, w, None)?.integrate(f)
}

/// Sup of `|f|` over `B_r`, using the same sub-lattice reconstruction as the integrals.
pub fn ball_sup(f: &ScalarField, r: f64) -> Result<f64> {
    let grid = f.grid();
    let rule = cached_rule(grid, r, WeightSpec::plain(), None)?;
    rule.check_field(f)?;
    let d = grid.dim();
    let m = grid.params().m();
    let h = grid.spacing();
    let strides = grid.strides();
    let kern = grid.kernel();
    let v = f.data();
    let offsets: Vec<Vec<f64>> =
        rule.subdiv.iter().map(|&s| (0..s).map(|j| (j as f64 + 0.5) / s as f64 - 0.5).collect()).collect();
    let r2 = r * r;
    let sup = rule
        .cells
        .par_iter()
        .map(|&i| {
            let mut centre = [0.0; MAX_DIM];
            grid.node_coords(i, &mut centre[..d]);
            let mut slope = [0.0; MAX_DIM];
            for k in 0..d {
                slope[k] = 0.5 * (v[i + strides[k]] - v[i - strides[k]]);
            }
            let mut best: f64 = 0.0;
            let mut sub = [0usize; MAX_DIM];
            let mut p = [0.0; MAX_DIM];
            loop {
                let mut val = v[i];
                for k in 0..d {
                    let t = offsets[k][sub[k]];
                    p[k] = centre[k] + t * h[k];
                    val += t * slope[k];
                }
                if kern.rho2(sq_norm(&p[..m]), sq_norm(&p[m..d])) < r2 {
                    best = best.max(val.abs());
                }
                let mut k = d;
                loop {
                    if k == 0 {
                        return best;
                    }
                    k -= 1;
                    sub[k] += 1;
                    if sub[k] < rule.subdiv[k] {
                        break;
                    }
                    sub[k] = 0;
                }
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

const MC_STREAMS: u64 = 16;
pub const MC_MIN_SAMPLES: usize = 10_000;

/// Rejection-sampling estimate of `∫_{B_r} g w` with its standard error.
///
/// Samples are split over a fixed number of ChaCha streams keyed by
/// `(seed, stream)`, so the estimate does not depend on the thread count.
pub fn mc_ball_integral<G>(
    params: &GrushinParams,
    g: G,
    r: f64,
    w: WeightSpec,
    samples: usize,
    seed: u64,
) -> Result<QuadratureResult>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonPositiveRadius(r));
    }
    if samples < MC_MIN_SAMPLES {
        return Err(invalid(format!("need at least {MC_MIN_SAMPLES} samples, got {samples}")));
    }
    let d = params.dim();
    let m = params.m();
    let hw = ball_half_widths(params, r);
    let box_vol: f64 = hw.iter().map(|a| 2.0 * a).product();
    let kern = params.kernel();
    let beta = params.beta();
    let r2 = r * r;
    let per = samples as u64 / MC_STREAMS;
    let extra = samples as u64 % MC_STREAMS;

    let partials: Vec<(f64, f64, u64)> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let n = per + u64::from(stream < extra);
            let mut p = [0.0; MAX_DIM];
            let (mut s1, mut s2, mut hits) = (0.0, 0.0, 0u64);
            for _ in 0..n {
                for k in 0..d {
                    p[k] = rng.random_range(-hw[k]..hw[k]);
                }
                let x2 = sq_norm(&p[..m]);
                let rho2 = kern.rho2(x2, sq_norm(&p[m..d]));
                if rho2 < r2 {
                    let v = g(&p[..d]) * w.eval(r2, x2, rho2, kern.psi(x2, rho2), beta);
                    s1 += v;
                    s2 += v * v;
                    hits += 1;
                }
            }
            (s1, s2, hits)
        })
        .collect();
    let (s1, s2, hits) = partials.iter().fold((0.0, 0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = samples as f64;
    let rate = hits as f64 / n;
    if rate < 1e-3 {
        return Err(Error::DegenerateSampling { rate });
    }
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(QuadratureResult {
        value: box_vol * mean,
        stderr: box_vol * (var / n).sqrt(),
        cells_used: hits as usize,
        boundary_cells_subsampled: 0,
    })
}
