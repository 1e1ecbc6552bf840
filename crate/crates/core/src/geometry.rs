//! Closed-form anisotropic geometry of the Baouendi-Grushin family.
//!
//! Everything here is a pure function of its inputs. Hot loops elsewhere in
//! the crate go through [`GaugeKernel`], which works on squared block norms
//! `|x|²`, `|y|²` and never allocates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Dimensions and anisotropy of `Δ_x + |x|^{2β} Δ_y` on `R^m × R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GrushinParams {
    m: usize,
    n: usize,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    m: usize,
    n: usize,
    beta: f64,
}

impl TryFrom<RawParams> for GrushinParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        GrushinParams::new(raw.m, raw.n, raw.beta)
    }
}

impl From<GrushinParams> for RawParams {
    fn from(p: GrushinParams) -> Self {
        RawParams { m: p.m, n: p.n, beta: p.beta }
    }
}

impl GrushinParams {
    pub fn new(m: usize, n: usize, beta: f64) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(invalid(format!("need m >= 1 and n >= 1, got m={m}, n={n}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1], got {beta}")));
        }
        Ok(Self { m, n, beta })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Total number of coordinates, `m + n`.
    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Homogeneous dimension `Q = m + (β+1) n`.
    pub fn homogeneous_dimension(&self) -> f64 {
        self.m as f64 + (self.beta + 1.0) * self.n as f64
    }

    pub fn kernel(&self) -> GaugeKernel {
        GaugeKernel::new(self.beta)
    }

    /// Hardy-type estimates and the frequency constants need `m > 2`.
    pub fn require_m_above_two(&self) -> Result<()> {
        if self.m <= 2 {
            return Err(Error::Hypothesis(format!("m > 2 required, got m = {}", self.m)));
        }
        Ok(())
    }
}

/// A point `z = (x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }

    /// Splits a flat coordinate vector `(x_1..x_m, y_1..y_n)`.
    pub fn from_coords(params: &GrushinParams, coords: &[f64]) -> Result<Self> {
        if coords.len() != params.dim() {
            return Err(Error::DimensionMismatch { expected: params.dim(), got: coords.len() });
        }
        let (x, y) = coords.split_at(params.m());
        Ok(Self { x: x.to_vec(), y: y.to_vec() })
    }

    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().chain(self.y.iter()).copied().collect()
    }

    fn check(&self, params: &GrushinParams) -> Result<()> {
        if self.x.len() != params.m() {
            return Err(Error::DimensionMismatch { expected: params.m(), got: self.x.len() });
        }
        if self.y.len() != params.n() {
            return Err(Error::DimensionMismatch { expected: params.n(), got: self.y.len() });
        }
        Ok(())
    }

    fn norms2(&self) -> (f64, f64) {
        (sq_norm(&self.x), sq_norm(&self.y))
    }

    fn is_origin(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|&c| c == 0.0)
    }
}

#[inline]
pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// Scalar kernels on squared block norms, with a fast path for `β = 1`.
#[derive(Clone, Copy, Debug)]
pub struct GaugeKernel {
    beta: f64,
    b1: f64,
    b1_sq: f64,
    unit: bool,
}

impl GaugeKernel {
    pub fn new(beta: f64) -> Self {
        let b1 = beta + 1.0;
        Self { beta, b1, b1_sq: b1 * b1, unit: beta == 1.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ρ` from `|x|²` and `|y|²`.
    #[inline]
    pub fn rho(&self, x2: f64, y2: f64) -> f64 {
        if self.unit {
            (x2 * x2 + 4.0 * y2).sqrt().sqrt()
        } else {
            (x2.powf(self.b1) + self.b1_sq * y2).powf(0.5 / self.b1)
        }
    }

    /// `ρ²` from `|x|²` and `|y|²`.
    #[inline]
    pub fn rho2(&self, x2: f64, y2: f64) -> f64 {
        if self.unit {
            (x2 * x2 + 4.0 * y2).sqrt()
        } else {
            (x2.powf(self.b1) + self.b1_sq * y2).powf(1.0 / self.b1)
        }
    }

    /// `ψ = |x|^{2β} / ρ^{2β}` given `|x|²` and `ρ²`; 1 at the origin.
    #[inline]
    pub fn psi(&self, x2: f64, rho2: f64) -> f64 {
        if rho2 == 0.0 {
            return 1.0;
        }
        let ratio = (x2 / rho2).min(1.0);
        if self.unit {
            ratio
        } else {
            ratio.powf(self.beta)
        }
    }

    /// `|x|^β` given `|x|²`.
    #[inline]
    pub fn abs_x_pow_beta(&self, x2: f64) -> f64 {
        if self.unit {
            x2.sqrt()
        } else {
            x2.powf(0.5 * self.beta)
        }
    }

    /// `|x|^{2β}` given `|x|²`.
    #[inline]
    pub fn abs_x_pow_2beta(&self, x2: f64) -> f64 {
        if self.unit {
            x2
        } else {
            x2.powf(self.beta)
        }
    }
}

/// Pseudo-gauge `ρ = (|x|^{2(β+1)} + (β+1)²|y|²)^{1/(2(β+1))}`.
pub fn pseudo_gauge(params: &GrushinParams, p: &Point) -> Result<f64> {
    p.check(params)?;
    let (x2, y2) = p.norms2();
    Ok(params.kernel().rho(x2, y2))
}

/// Angle function `ψ = |x|^{2β}/ρ^{2β}`; the origin gets the value 1.
pub fn angle_psi(params: &GrushinParams, p: &Point) -> Result<f64> {
    angle_psi_flagged(params, p).map(|(v, _)| v)
}

/// Like [`angle_psi`], also reporting whether the conventional origin value was used.
pub fn angle_psi_flagged(params: &GrushinParams, p: &Point) -> Result<(f64, bool)> {
    p.check(params)?;
    if p.is_origin() {
        return Ok((1.0, true));
    }
    let k = params.kernel();
    let (x2, y2) = p.norms2();
    Ok((k.psi(x2, k.rho2(x2, y2)), false))
}

/// Anisotropic dilation `δ_a(x, y) = (a x, a^{β+1} y)`.
pub fn dilate(params: &GrushinParams, a: f64, p: &Point) -> Result<Point> {
    p.check(params)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid(format!("dilation factor must be positive, got {a}")));
    }
    let ay = a.powf(params.beta() + 1.0);
    Ok(Point {
        x: p.x.iter().map(|c| a * c).collect(),
        y: p.y.iter().map(|c| ay * c).collect(),
    })
}

/// Horizontal gradient `Xρ = ρ^{-(2β+1)} (|x|^{2β} x, (β+1)|x|^β y)`.
pub fn x_grad_rho(params: &GrushinParams, p: &Point) -> Result<Vec<f64>> {
    p.check(params)?;
    let (x2, y2) = p.norms2();
    if x2 == 0.0 {
        return Err(Error::DegeneratePoint("X rho needs x != 0"));
    }
    let k = params.kernel();
    let beta = params.beta();
    let rho = k.rho(x2, y2);
    let scale = rho.powf(-(2.0 * beta + 1.0));
    let ax2b = k.abs_x_pow_2beta(x2);
    let axb = k.abs_x_pow_beta(x2);
    let mut out = Vec::with_capacity(params.dim());
    out.extend(p.x.iter().map(|c| scale * ax2b * c));
    out.extend(p.y.iter().map(|c| scale * (beta + 1.0) * axb * c));
    Ok(out)
}

/// Coefficients of the dilation generator `Z = Σ x_i ∂_{x_i} + (β+1) Σ y_j ∂_{y_j}`.
pub fn z_coefficients(params: &GrushinParams, p: &Point) -> Result<Vec<f64>> {
    p.check(params)?;
    let b1 = params.beta() + 1.0;
    Ok(p.x.iter().copied().chain(p.y.iter().map(|c| b1 * c)).collect())
}

/// Fundamental solution `Γ = ρ^{2-Q}` with unit normalisation.
pub fn fundamental_solution(params: &GrushinParams, p: &Point) -> Result<f64> {
    let q = params.homogeneous_dimension();
    if q <= 2.0 {
        return Err(Error::Hypothesis(format!("Q > 2 required, got {q}")));
    }
    let rho = pseudo_gauge(params, p)?;
    if rho == 0.0 {
        return Err(Error::DegeneratePoint("fundamental solution has a pole at the origin"));
    }
    Ok(rho.powf(2.0 - q))
}

/// `ρ` for each point in a flat `(m+n)`-strided coordinate buffer.
pub fn pseudo_gauge_many(params: &GrushinParams, coords: &[f64]) -> Result<Vec<f64>> {
    map_points(params, coords, |k, x2, y2| k.rho(x2, y2))
}

/// `ψ` for each point in a flat `(m+n)`-strided coordinate buffer.
pub fn angle_psi_many(params: &GrushinParams, coords: &[f64]) -> Result<Vec<f64>> {
    map_points(params, coords, |k, x2, y2| k.psi(x2, k.rho2(x2, y2)))
}

fn map_points(
    params: &GrushinParams,
    coords: &[f64],
    f: impl Fn(&GaugeKernel, f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let d = params.dim();
    if coords.len() % d != 0 {
        return Err(Error::DimensionMismatch { expected: d, got: coords.len() % d });
    }
    let k = params.kernel();
    Ok(coords
        .chunks_exact(d)
        .map(|c| {
            let (x, y) = c.split_at(params.m());
            f(&k, sq_norm(x), sq_norm(y))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p11() -> GrushinParams {
        GrushinParams::new(1, 1, 1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GrushinParams::new(3, 1, 1.5).is_err());
        assert!(GrushinParams::new(3, 1, 0.0).is_err());
        assert!(GrushinParams::new(0, 1, 0.5).is_err());
        let p = GrushinParams::new(3, 2, 0.5).unwrap();
        assert_eq!(p.homogeneous_dimension(), 3.0 + 1.5 * 2.0);
    }

    #[test]
    fn gauge_examples() {
        let p = p11();
        assert_relative_eq!(pseudo_gauge(&p, &Point::new(vec![2.0], vec![0.0])).unwrap(), 2.0);
        assert_relative_eq!(
            pseudo_gauge(&p, &Point::new(vec![0.0], vec![4.0])).unwrap(),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-14
        );
        let q = GrushinParams::new(2, 1, 0.5).unwrap();
        assert_relative_eq!(pseudo_gauge(&q, &Point::new(vec![1.0, 0.0], vec![0.0])).unwrap(), 1.0);
        assert!(pseudo_gauge(&q, &Point::new(vec![1.0], vec![0.0])).is_err());
    }

    #[test]
    fn psi_examples() {
        let p = p11();
        assert_eq!(angle_psi(&p, &Point::new(vec![3.0], vec![0.0])).unwrap(), 1.0);
        assert_eq!(angle_psi(&p, &Point::new(vec![0.0], vec![5.0])).unwrap(), 0.0);
        assert_relative_eq!(
            angle_psi(&p, &Point::new(vec![1.0], vec![1.0])).unwrap(),
            1.0 / 5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(angle_psi_flagged(&p, &Point::new(vec![0.0], vec![0.0])).unwrap(), (1.0, true));
    }

    #[test]
    fn dilation_examples() {
        let p = p11();
        let z = Point::new(vec![1.0], vec![1.0]);
        assert_eq!(dilate(&p, 1.0, &z).unwrap(), z);
        assert_eq!(dilate(&p, 2.0, &z).unwrap(), Point::new(vec![2.0], vec![4.0]));
        let r1 = pseudo_gauge(&p, &z).unwrap();
        let r3 = pseudo_gauge(&p, &dilate(&p, 3.0, &z).unwrap()).unwrap();
        assert_relative_eq!(r3, 3.0 * r1, epsilon = 1e-14);
        assert!(dilate(&p, 0.0, &z).is_err());
        assert!(dilate(&p, -1.0, &z).is_err());
    }

    #[test]
    fn x_grad_rho_examples() {
        let p = p11();
        let g = x_grad_rho(&p, &Point::new(vec![1.0], vec![0.0])).unwrap();
        assert_relative_eq!(g[0], 1.0);
        assert_eq!(g[1], 0.0);
        let z = Point::new(vec![1.0], vec![1.0]);
        let g = x_grad_rho(&p, &z).unwrap();
        assert_relative_eq!(sq_norm(&g), angle_psi(&p, &z).unwrap(), epsilon = 1e-15);
        let q = GrushinParams::new(2, 1, 1.0).unwrap();
        let g = x_grad_rho(&q, &Point::new(vec![0.0, 2.0], vec![0.0])).unwrap();
        assert_eq!(g.len(), 3);
        assert_relative_eq!(g[1], 1.0, epsilon = 1e-15);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2], 0.0);
        assert!(x_grad_rho(&p, &Point::new(vec![0.0], vec![1.0])).is_err());
    }

    #[test]
    fn z_coefficient_examples() {
        let p = p11();
        assert_eq!(z_coefficients(&p, &Point::new(vec![0.0], vec![0.0])).unwrap(), vec![0.0, 0.0]);
        let z = Point::new(vec![1.0], vec![1.0]);
        let c = z_coefficients(&p, &z).unwrap();
        assert_eq!(c, vec![1.0, 2.0]);
        // Z ρ = ρ by central differences of the closed form
        let h = 1e-5;
        let mut dr = 0.0;
        for (k, ck) in c.iter().enumerate() {
            let mut plus = z.coords();
            let mut minus = z.coords();
            plus[k] += h;
            minus[k] -= h;
            let rp = pseudo_gauge(&p, &Point::from_coords(&p, &plus).unwrap()).unwrap();
            let rm = pseudo_gauge(&p, &Point::from_coords(&p, &minus).unwrap()).unwrap();
            dr += ck * (rp - rm) / (2.0 * h);
        }
        assert_relative_eq!(dr, pseudo_gauge(&p, &z).unwrap(), epsilon = 1e-8);
    }

    #[test]
    fn fundamental_solution_examples() {
        let p = GrushinParams::new(2, 3, 1.0).unwrap();
        assert_eq!(p.homogeneous_dimension(), 8.0);
        let unit = Point::new(vec![1.0, 0.0], vec![0.0; 3]);
        assert_relative_eq!(fundamental_solution(&p, &unit).unwrap(), 1.0);
        let two = Point::new(vec![2.0, 0.0], vec![0.0; 3]);
        assert_relative_eq!(fundamental_solution(&p, &two).unwrap(), 0.015625, epsilon = 1e-15);
        let z = Point::new(vec![0.3, -0.2], vec![0.1, 0.4, -0.2]);
        let g1 = fundamental_solution(&p, &z).unwrap();
        let g2 = fundamental_solution(&p, &dilate(&p, 2.0, &z).unwrap()).unwrap();
        assert_relative_eq!(g2, 2f64.powf(-6.0) * g1, max_relative = 1e-13);
        let origin = Point::new(vec![0.0; 2], vec![0.0; 3]);
        assert!(fundamental_solution(&p, &origin).is_err());
    }

    #[test]
    fn unit_beta_closed_form_spot_check() {
        let p = p11();
        for &(x, y) in &[(0.3, -0.7), (1.5, 0.2), (-0.01, 2.0)] {
            let rho = pseudo_gauge(&p, &Point::new(vec![x], vec![y])).unwrap();
            let f: f64 = x * x * x * x + 4.0 * y * y;
            assert_relative_eq!(rho, f.powf(0.25), max_relative = 1e-14);
        }
    }

    #[test]
    fn batch_matches_pointwise() {
        let p = GrushinParams::new(2, 1, 0.5).unwrap();
        let coords = [0.1, 0.2, 0.3, -1.0, 0.5, 0.0];
        let rho = pseudo_gauge_many(&p, &coords).unwrap();
        let psi = angle_psi_many(&p, &coords).unwrap();
        for (i, c) in coords.chunks(3).enumerate() {
            let z = Point::from_coords(&p, c).unwrap();
            assert_eq!(rho[i], pseudo_gauge(&p, &z).unwrap());
            assert_relative_eq!(psi[i], angle_psi(&p, &z).unwrap(), max_relative = 1e-14);
        }
        assert!(pseudo_gauge_many(&p, &coords[..4]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = GrushinParams> {
            (1usize..4, 1usize..3, 0.05f64..=1.0).prop_map(|(m, n, b)| GrushinParams::new(m, n, b).unwrap())
        }

        fn point_for(p: GrushinParams) -> impl Strategy<Value = (GrushinParams, Point)> {
            (
                proptest::collection::vec(-2.0f64..2.0, p.m()),
                proptest::collection::vec(-2.0f64..2.0, p.n()),
            )
                .prop_map(move |(x, y)| (p, Point::new(x, y)))
        }

        proptest! {
            #[test]
            fn homogeneity((p, z) in params().prop_flat_map(point_for), a in 0.1f64..5.0) {
                let rho = pseudo_gauge(&p, &z).unwrap();
                prop_assume!(rho > 1e-6);
                let dz = dilate(&p, a, &z).unwrap();
                let rho_a = pseudo_gauge(&p, &dz).unwrap();
                prop_assert!((rho_a - a * rho).abs() <= 1e-12 * a * rho);
                let psi = angle_psi(&p, &z).unwrap();
                let psi_a = angle_psi(&p, &dz).unwrap();
                prop_assert!((psi - psi_a).abs() <= 1e-12);
                prop_assert!((0.0..=1.0).contains(&psi));
            }

            #[test]
            fn grad_norm_is_psi((p, z) in params().prop_flat_map(point_for)) {
                prop_assume!(sq_norm(&z.x) > 1e-8);
                let g = x_grad_rho(&p, &z).unwrap();
                let psi = angle_psi(&p, &z).unwrap();
                prop_assert!((sq_norm(&g) - psi).abs() <= 1e-12);
            }

            #[test]
            fn gauge_on_horizontal_plane((p, z) in params().prop_flat_map(point_for)) {
                let flat = Point::new(z.x.clone(), vec![0.0; p.n()]);
                let rho = pseudo_gauge(&p, &flat).unwrap();
                prop_assert!((rho - sq_norm(&z.x).sqrt()).abs() <= 1e-14 * (1.0 + rho));
                if sq_norm(&z.x) > 0.0 {
                    prop_assert!((angle_psi(&p, &flat).unwrap() - 1.0).abs() <= 1e-14);
                }
            }
        }
    }
}
