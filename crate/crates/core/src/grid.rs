//! Cell-centred tensor grids and the fields that live on them.
//!
//! A grid with `counts[k]` lines along axis `k` has `counts[k] - 1` cells
//! and one node at the centre of each cell. Fields carry a uniform `margin`:
//! node `i` is valid iff `margin <= i_k < nodes_k - margin` on every axis.
//! Values outside the valid box are stored as NaN.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{GaugeKernel, GrushinParams};

/// Largest supported `m + n`.
pub const MAX_DIM: usize = 8;
/// Smallest accepted number of grid lines per axis.
pub const MIN_COUNTS: usize = 8;

/// Box bounds and grid-line counts, the serialisable part of a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    /// The cube `[-half, half]^{m+n}` with the same count on every axis.
    pub fn cube(params: &GrushinParams, half: f64, counts: usize) -> Self {
        let d = params.dim();
        Self { lower: vec![-half; d], upper: vec![half; d], counts: vec![counts; d] }
    }
}

#[derive(Debug)]
pub struct Grid {
    params: GrushinParams,
    spec: GridSpec,
    nodes: Vec<usize>,
    h: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
    coords: Vec<Vec<f64>>,
    cache: GeometryCache,
}

#[derive(Debug, Default)]
struct GeometryCache {
    x2: OnceLock<Vec<f64>>,
    y2: OnceLock<Vec<f64>>,
    rho: OnceLock<Vec<f64>>,
    psi: OnceLock<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.spec == other.spec
    }
}

impl Grid {
    pub fn new(params: GrushinParams, spec: GridSpec) -> Result<Arc<Self>> {
        let d = params.dim();
        if d > MAX_DIM {
            return Err(invalid(format!("m + n = {d} exceeds the supported maximum {MAX_DIM}")));
        }
        for (name, len) in [("lower", spec.lower.len()), ("upper", spec.upper.len()), ("counts", spec.counts.len())] {
            if len != d {
                return Err(invalid(format!("{name} has {len} entries, expected {d}")));
            }
        }
        let mut nodes = Vec::with_capacity(d);
        let mut h = Vec::with_capacity(d);
        let mut coords = Vec::with_capacity(d);
        for k in 0..d {
            let (lo, hi, c) = (spec.lower[k], spec.upper[k], spec.counts[k]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("axis {k}: need finite lower < upper, got [{lo}, {hi}]")));
            }
            if c < MIN_COUNTS {
                return Err(Error::GridTooSmall(format!("axis {k} has {c} grid lines, minimum is {MIN_COUNTS}")));
            }
            let cells = c - 1;
            let hk = (hi - lo) / cells as f64;
            let axis: Vec<f64> = (0..cells).map(|i| lo + (i as f64 + 0.5) * hk).collect();
            if k < params.m() && axis.iter().any(|&v| v == 0.0) {
                return Err(invalid(format!(
                    "axis {k}: a node falls on x = 0; use an even number of cells ({c} lines gives {cells})"
                )));
            }
            nodes.push(cells);
            h.push(hk);
            coords.push(axis);
        }
        let mut strides = vec![1usize; d];
        for k in (0..d - 1).rev() {
            strides[k] = strides[k + 1] * nodes[k + 1];
        }
        let len = strides[0] * nodes[0];
        Ok(Arc::new(Self { params, spec, nodes, h, strides, len, coords, cache: GeometryCache::default() }))
    }

    pub fn cube(params: GrushinParams, half: f64, counts: usize) -> Result<Arc<Self>> {
        Self::new(params, GridSpec::cube(&params, half, counts))
    }

    pub fn params(&self) -> &GrushinParams {
        &self.params
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Number of nodes (cells) along each axis.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Node coordinates along axis `k`.
    pub fn axis(&self, k: usize) -> &[f64] {
        &self.coords[k]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn kernel(&self) -> GaugeKernel {
        self.params.kernel()
    }

    /// Largest `r` such that the bounding box of `B_r` stays inside the box.
    pub fn inradius(&self) -> f64 {
        let m = self.params.m();
        let b1 = self.params.beta() + 1.0;
        let mut r = f64::INFINITY;
        for k in 0..self.dim() {
            let half = (-self.spec.lower[k]).min(self.spec.upper[k]).max(0.0);
            let rk = if k < m { half } else { (b1 * half).powf(1.0 / b1) };
            r = r.min(rk);
        }
        r
    }

    pub fn decode(&self, mut idx: usize, out: &mut [usize]) {
        for k in 0..self.dim() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
    }

    pub fn encode(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            out[k] = self.coords[k][i];
        }
    }

    /// True when node `idx` lies in the valid box of a field with margin `margin`.
    pub fn in_margin(&self, idx: usize, margin: usize) -> bool {
        let mut rem = idx;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            if i < margin || i + margin >= self.nodes[k] {
                return false;
            }
        }
        true
    }

    pub fn check_margin(&self, margin: usize) -> Result<()> {
        for &n in &self.nodes {
            if 2 * margin >= n {
                return Err(Error::MaskExhausted { margin, nodes: n });
            }
        }
        Ok(())
    }

    /// Fills a fresh buffer in parallel; `f(idx, multi)` is called on valid nodes only.
    pub fn fill<F>(&self, margin: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &[usize]) -> f64 + Sync,
    {
        self.check_margin(margin)?;
        let d = self.dim();
        let mut data = vec![f64::NAN; self.len];
        let slab = self.strides[0];
        data.par_chunks_mut(slab).enumerate().for_each(|(i0, chunk)| {
            if i0 < margin || i0 + margin >= self.nodes[0] {
                return;
            }
            let mut multi = [0usize; MAX_DIM];
            multi[0] = i0;
            for k in 1..d {
                multi[k] = margin;
            }
            loop {
                let local: usize = (1..d).map(|k| multi[k] * self.strides[k]).sum();
                chunk[local] = f(i0 * slab + local, &multi[..d]);
                // odometer over axes 1..d restricted to the valid range
                let mut k = d - 1;
                loop {
                    if k == 0 {
                        return;
                    }
                    multi[k] += 1;
                    if multi[k] + margin < self.nodes[k] {
                        break;
                    }
                    multi[k] = margin;
                    k -= 1;
                }
            }
        });
        Ok(data)
    }

    /// `|x|²` at every node.
    pub fn x2(&self) -> &[f64] {
        self.cache.x2.get_or_init(|| self.block_norm2(0..self.params.m()))
    }

    /// `|y|²` at every node.
    pub fn y2(&self) -> &[f64] {
        self.cache.y2.get_or_init(|| self.block_norm2(self.params.m()..self.dim()))
    }

    pub fn rho(&self) -> &[f64] {
        self.cache.rho.get_or_init(|| {
            let k = self.kernel();
            let (x2, y2) = (self.x2(), self.y2());
            (0..self.len).into_par_iter().map(|i| k.rho(x2[i], y2[i])).collect()
        })
    }

    pub fn psi(&self) -> &[f64] {
        self.cache.psi.get_or_init(|| {
            let k = self.kernel();
            let (x2, y2) = (self.x2(), self.y2());
            (0..self.len).into_par_iter().map(|i| k.psi(x2[i], k.rho2(x2[i], y2[i]))).collect()
        })
    }

    fn block_norm2(&self, axes: std::ops::Range<usize>) -> Vec<f64> {
        self.fill(0, |_, multi| axes.clone().map(|k| self.coords[k][multi[k]].powi(2)).sum())
            .expect("margin 0 is always valid")
    }
}

/// A scalar function sampled at grid nodes.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    data: Vec<f64>,
    margin: usize,
}

impl ScalarField {
    pub fn from_data(grid: Arc<Grid>, data: Vec<f64>, margin: usize) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: data.len() });
        }
        grid.check_margin(margin)?;
        Ok(Self { grid, data, margin })
    }

    /// Samples `f(coords)` at every node.
    pub fn sample<F>(grid: &Arc<Grid>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = grid.dim();
        let data = grid.fill(0, |_, multi| {
            let mut c = [0.0; MAX_DIM];
            for k in 0..d {
                c[k] = grid.axis(k)[multi[k]];
            }
            f(&c[..d])
        })?;
        Ok(Self { grid: grid.clone(), data, margin: 0 })
    }

    /// Samples a fallible callable; the first error (in node order) is returned.
    pub fn try_sample<F>(grid: &Arc<Grid>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let d = grid.dim();
        let vals: Vec<Result<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let mut c = [0.0; MAX_DIM];
                grid.node_coords(i, &mut c[..d]);
                f(&c[..d])
            })
            .collect();
        let data = vals.into_iter().collect::<Result<Vec<f64>>>()?;
        Ok(Self { grid: grid.clone(), data, margin: 0 })
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        Self { grid: grid.clone(), data: vec![value; grid.len()], margin: 0 }
    }

    pub fn rho(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), data: grid.rho().to_vec(), margin: 0 }
    }

    pub fn psi(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), data: grid.psi().to_vec(), margin: 0 }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.data[idx]
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.grid.in_margin(idx, self.margin)
    }

    /// Copy with a wider margin; newly excluded nodes become NaN.
    pub fn restrict(&self, margin: usize) -> Result<Self> {
        if margin < self.margin {
            return Err(invalid(format!("cannot widen the valid region from margin {} to {margin}", self.margin)));
        }
        let data = self.grid.fill(margin, |i, _| self.data[i])?;
        Ok(Self { grid: self.grid.clone(), data, margin })
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let data = self.grid.fill(self.margin, |i, _| f(self.data[i])).expect("margin already validated");
        Self { grid: self.grid.clone(), data, margin: self.margin }
    }

    /// Pointwise combination on the intersection of both valid regions.
    pub fn zip_map<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        let margin = self.margin.max(other.margin);
        let data = self.grid.fill(margin, |i, _| f(self.data[i], other.data[i]))?;
        Ok(Self { grid: self.grid.clone(), data, margin })
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Indices of valid nodes, in ascending order.
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.data.len()).filter(|&i| self.is_valid(i)).collect()
    }

    /// Max of `|f|` over valid nodes where `keep(idx)` holds; `None` if no node qualifies.
    pub fn max_abs_where<P>(&self, keep: P) -> Option<f64>
    where
        P: Fn(usize) -> bool + Sync,
    {
        (0..self.data.len())
            .into_par_iter()
            .filter(|&i| self.is_valid(i) && keep(i))
            .map(|i| self.data[i].abs())
            .reduce_with(f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_where(|_| true).unwrap_or(0.0)
    }
}

/// `m + n` component fields sharing one grid and margin.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    components: Vec<Vec<f64>>,
    margin: usize,
}

impl VectorField {
    pub fn from_components(grid: Arc<Grid>, components: Vec<Vec<f64>>, margin: usize) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: components.len() });
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), got: c.len() });
            }
        }
        grid.check_margin(margin)?;
        Ok(Self { grid, components, margin })
    }

    /// The same constant vector at every node.
    pub fn constant(grid: &Arc<Grid>, value: &[f64]) -> Result<Self> {
        if value.len() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: value.len() });
        }
        let components = value.iter().map(|&v| vec![v; grid.len()]).collect();
        Ok(Self { grid: grid.clone(), components, margin: 0 })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component_field(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), data: self.components[k].clone(), margin: self.margin }
    }

    /// Pointwise squared Euclidean norm.
    pub fn norm2(&self) -> ScalarField {
        let data = self
            .grid
            .fill(self.margin, |i, _| self.components.iter().map(|c| c[i] * c[i]).sum())
            .expect("margin already validated");
        ScalarField { grid: self.grid.clone(), data, margin: self.margin }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GrushinParams {
        GrushinParams::new(2, 1, 1.0).unwrap()
    }

    #[test]
    fn cell_centred_layout() {
        let g = Grid::cube(params(), 1.0, 9).unwrap();
        assert_eq!(g.nodes(), &[8, 8, 8]);
        assert_eq!(g.len(), 512);
        assert!((g.spacing()[0] - 0.25).abs() < 1e-15);
        assert!((g.axis(0)[0] + 0.875).abs() < 1e-15);
        assert!(g.axis(0).iter().all(|&v| v != 0.0));
        let mut multi = [0; 3];
        g.decode(g.encode(&[3, 5, 7]), &mut multi);
        assert_eq!(multi, [3, 5, 7]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::cube(params(), 1.0, 4), Err(Error::GridTooSmall(_))));
        // 8 lines gives 7 cells with a node on x = 0
        assert!(Grid::cube(params(), 1.0, 8).is_err());
        let spec = GridSpec { lower: vec![-1.0; 2], upper: vec![1.0; 2], counts: vec![9; 2] };
        assert!(Grid::new(params(), spec).is_err());
    }

    #[test]
    fn margins_and_fill() {
        let g = Grid::cube(params(), 1.0, 9).unwrap();
        let f = ScalarField::sample(&g, |c| c[0] + 2.0 * c[2]).unwrap();
        let r = f.restrict(2).unwrap();
        assert_eq!(r.valid_indices().len(), 4 * 4 * 4);
        let idx = g.encode(&[1, 4, 4]);
        assert!(r.get(idx).is_nan());
        let idx = g.encode(&[2, 4, 5]);
        assert_eq!(r.get(idx), f.get(idx));
        assert!(f.restrict(4).is_err());
        let s = f.add(&r).unwrap();
        assert_eq!(s.margin(), 2);
        assert_eq!(s.get(idx), 2.0 * f.get(idx));
    }

    #[test]
    fn cached_geometry_matches_kernel() {
        let g = Grid::cube(params(), 1.0, 9).unwrap();
        let k = g.kernel();
        let mut c = [0.0; 3];
        for i in [0, 17, 300, 511] {
            g.node_coords(i, &mut c);
            let x2 = c[0] * c[0] + c[1] * c[1];
            let y2 = c[2] * c[2];
            assert_eq!(g.rho()[i], k.rho(x2, y2));
            assert_eq!(g.psi()[i], k.psi(x2, k.rho2(x2, y2)));
        }
    }

    #[test]
    fn inradius_accounts_for_anisotropy() {
        let g = Grid::cube(params(), 1.2, 17).unwrap();
        // y half-width 1.2 reaches rho = sqrt(2 * 1.2)
        assert!((g.inradius() - 1.2).abs() < 1e-15);
        let p = GrushinParams::new(1, 1, 1.0).unwrap();
        let spec = GridSpec { lower: vec![-2.0, -0.5], upper: vec![2.0, 0.5], counts: vec![9, 9] };
        let g = Grid::new(p, spec).unwrap();
        assert!((g.inradius() - 1.0).abs() < 1e-15);
    }
}
