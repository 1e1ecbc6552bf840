//! Second-order centred finite differences for the horizontal vector fields
//! `X_i = ∂_{x_i}`, `X_{m+j} = |x|^β ∂_{y_j}` and the operators built on them.
//!
//! Every operator returns a fresh field whose margin is the input margin plus
//! the stencil radius, so no one-sided differences are ever taken.

use crate::error::{invalid, Result};
use crate::grid::{ScalarField, VectorField};

fn first_difference(f: &ScalarField, k: usize, scale_by_x: bool) -> Result<ScalarField> {
    let grid = f.grid();
    let margin = f.margin() + 1;
    let s = grid.strides()[k];
    let inv = 0.5 / grid.spacing()[k];
    let data = f.data();
    let x2 = grid.x2();
    let kern = grid.kernel();
    let out = grid.fill(margin, |i, _| {
        let d = (data[i + s] - data[i - s]) * inv;
        if scale_by_x {
            kern.abs_x_pow_beta(x2[i]) * d
        } else {
            d
        }
    })?;
    ScalarField::from_data(grid.clone(), out, margin)
}

/// Centred difference `∂_k f` along coordinate axis `k` (0-based over `(x, y)`).
pub fn partial(f: &ScalarField, k: usize) -> Result<ScalarField> {
    check_axis(f, k)?;
    first_difference(f, k, false)
}

/// `X_k f` for the 0-based horizontal index `k < m + n`.
pub fn x_derivative(f: &ScalarField, k: usize) -> Result<ScalarField> {
    check_axis(f, k)?;
    first_difference(f, k, k >= f.grid().params().m())
}

fn check_axis(f: &ScalarField, k: usize) -> Result<()> {
    let d = f.grid().dim();
    if k >= d {
        return Err(invalid(format!("axis index {k} out of range 0..{d}")));
    }
    Ok(())
}

/// Horizontal gradient `Xf = (X_1 f, …, X_{m+n} f)`.
pub fn x_gradient(f: &ScalarField) -> Result<VectorField> {
    let grid = f.grid();
    let comps = (0..grid.dim())
        .map(|k| x_derivative(f, k).map(ScalarField::into_data))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(grid.clone(), comps, f.margin() + 1)
}

/// `|Xf|²` without materialising the gradient.
pub fn x_gradient_norm2(f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    let margin = f.margin() + 1;
    let m = grid.params().m();
    let x2 = grid.x2();
    let kern = grid.kernel();
    let strides = grid.strides();
    let half_inv_h: Vec<f64> = grid.spacing().iter().map(|h| 0.5 / h).collect();
    let v = f.data();
    let out = grid.fill(margin, |i, _| {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (k, (&s, &c)) in strides.iter().zip(&half_inv_h).enumerate() {
            let d = (v[i + s] - v[i - s]) * c;
            if k < m {
                gx += d * d;
            } else {
                gy += d * d;
            }
        }
        gx + kern.abs_x_pow_2beta(x2[i]) * gy
    })?;
    ScalarField::from_data(grid.clone(), out, margin)
}

/// Horizontal divergence `div_X F = Σ X_k F_k`.
pub fn x_divergence(field: &VectorField) -> Result<ScalarField> {
    let grid = field.grid();
    let margin = field.margin() + 1;
    let m = grid.params().m();
    let x2 = grid.x2();
    let kern = grid.kernel();
    let strides = grid.strides();
    let h = grid.spacing();
    let out = grid.fill(margin, |i, _| {
        let mut dx = 0.0;
        let mut dy = 0.0;
        for (k, c) in field.components().iter().enumerate() {
            let s = strides[k];
            let d = (c[i + s] - c[i - s]) * 0.5 / h[k];
            if k < m {
                dx += d;
            } else {
                dy += d;
            }
        }
        dx + kern.abs_x_pow_beta(x2[i]) * dy
    })?;
    ScalarField::from_data(grid.clone(), out, margin)
}

/// `Δ_X f = Δ_x f + |x|^{2β} Δ_y f` with three-point second differences.
pub fn grushin_laplacian(f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    let margin = f.margin() + 1;
    let m = grid.params().m();
    let d = grid.dim();
    let x2 = grid.x2();
    let kern = grid.kernel();
    let strides = grid.strides();
    let inv_h2: Vec<f64> = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
    let v = f.data();
    let out = grid.fill(margin, |i, _| {
        let c = 2.0 * v[i];
        let mut lx = 0.0;
        for k in 0..m {
            let s = strides[k];
            lx += (v[i + s] - c + v[i - s]) * inv_h2[k];
        }
        let mut ly = 0.0;
        for k in m..d {
            let s = strides[k];
            ly += (v[i + s] - c + v[i - s]) * inv_h2[k];
        }
        lx + kern.abs_x_pow_2beta(x2[i]) * ly
    })?;
    ScalarField::from_data(grid.clone(), out, margin)
}

/// `Δ_X² f`, the Grushin Laplacian applied twice.
pub fn grushin_bilaplacian(f: &ScalarField) -> Result<ScalarField> {
    grushin_laplacian(&grushin_laplacian(f)?)
}

/// `Zf = Σ x_i ∂_{x_i} f + (β+1) Σ y_j ∂_{y_j} f`.
pub fn z_derivative(f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    let margin = f.margin() + 1;
    let m = grid.params().m();
    let b1 = grid.params().beta() + 1.0;
    let strides = grid.strides();
    let half_inv_h: Vec<f64> = grid.spacing().iter().map(|h| 0.5 / h).collect();
    let v = f.data();
    let out = grid.fill(margin, |i, multi| {
        let mut acc = 0.0;
        for (k, &ik) in multi.iter().enumerate() {
            let s = strides[k];
            let coef = grid.axis(k)[ik] * if k < m { 1.0 } else { b1 };
            acc += coef * (v[i + s] - v[i - s]) * half_inv_h[k];
        }
        acc
    })?;
    ScalarField::from_data(grid.clone(), out, margin)
}

/// `(X_k Z − Z X_k) f − X_k f`, which vanishes in the continuum.
pub fn commutator_residual(f: &ScalarField, k: usize) -> Result<ScalarField> {
    let xz = x_derivative(&z_derivative(f)?, k)?;
    let xf = x_derivative(f, k)?;
    let zx = z_derivative(&xf)?;
    xz.sub(&zx)?.sub(&xf)
}

/// Largest stencil-derived margin that still leaves nodes on every axis.
pub fn max_margin(f: &ScalarField) -> usize {
    f.grid().nodes().iter().map(|n| (n - 1) / 2).min().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::GrushinParams;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn grid(counts: usize) -> Arc<Grid> {
        Grid::cube(GrushinParams::new(2, 1, 1.0).unwrap(), 1.0, counts).unwrap()
    }

    fn max_err(f: &ScalarField, exact: impl Fn(&[f64]) -> f64) -> f64 {
        let g = f.grid();
        let mut c = [0.0; 3];
        f.valid_indices()
            .into_iter()
            .map(|i| {
                g.node_coords(i, &mut c);
                (f.get(i) - exact(&c)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn gradient_of_coordinates() {
        let g = grid(13);
        let f = ScalarField::sample(&g, |c| c[0]).unwrap();
        let gr = x_gradient(&f).unwrap();
        assert_eq!(gr.margin(), 1);
        assert!(max_err(&gr.component_field(0), |_| 1.0) < 1e-12);
        assert!(max_err(&gr.component_field(1), |_| 0.0) < 1e-12);
        let f = ScalarField::sample(&g, |c| c[2]).unwrap();
        let gr = x_gradient(&f).unwrap();
        assert!(max_err(&gr.component_field(2), |c| (c[0] * c[0] + c[1] * c[1]).sqrt()) < 1e-12);
    }

    #[test]
    fn laplacian_exact_on_low_degree() {
        let g = grid(13);
        let f = ScalarField::sample(&g, |c| 3.0 * c[0] - c[2] + 0.5).unwrap();
        assert!(grushin_laplacian(&f).unwrap().max_abs() < 1e-10);
        let f = ScalarField::sample(&g, |c| c[0] * c[0] + c[2] * c[2]).unwrap();
        let l = grushin_laplacian(&f).unwrap();
        assert!(max_err(&l, |c| 2.0 + 2.0 * (c[0] * c[0] + c[1] * c[1])) < 1e-10);
        let f = ScalarField::sample(&g, |c| c[0].powi(3)).unwrap();
        assert!(grushin_bilaplacian(&f).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn divergence_of_gradient_matches_laplacian() {
        let g = grid(17);
        let f = ScalarField::sample(&g, |c| c[0] * c[0] + c[2] * c[2]).unwrap();
        let a = x_divergence(&x_gradient(&f).unwrap()).unwrap();
        assert!(max_err(&a, |c| 2.0 + 2.0 * (c[0] * c[0] + c[1] * c[1])) < 1e-10);
        let c = VectorField::constant(&g, &[1.0, -2.0, 3.0]).unwrap();
        assert!(x_divergence(&c).unwrap().max_abs() < 1e-14);
        let direct = x_gradient_norm2(&f).unwrap();
        let via = x_gradient(&f).unwrap().norm2();
        assert!(direct.sub(&via).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn z_on_homogeneous_functions() {
        let g = grid(33);
        let rho2 = ScalarField::rho(&g).map(|r| r * r);
        let z = z_derivative(&rho2).unwrap();
        // rho^2 varies on the scale |x|^2 along y, so stay clear of x = 0
        let x2 = g.x2();
        let rel = z
            .zip_map(&rho2, |a, b| (a - 2.0 * b).abs() / b)
            .unwrap()
            .max_abs_where(|i| x2[i] > 0.36)
            .unwrap();
        assert!(rel < 0.05, "{rel}");
        let f = ScalarField::sample(&g, |c| c[0] + c[1] * c[2]).unwrap();
        // Z is exact on polynomials of degree <= 2
        assert!(max_err(&z_derivative(&f).unwrap(), |c| c[0] + 3.0 * c[1] * c[2]) < 1e-12);
    }

    #[test]
    fn commutator_is_exact_on_linear_input() {
        let g = grid(13);
        let f = ScalarField::sample(&g, |c| c[0] - 0.3 * c[1]).unwrap();
        for k in 0..3 {
            let r = commutator_residual(&f, k).unwrap();
            assert_eq!(r.margin(), 2);
            assert!(r.max_abs() < 1e-11);
        }
        assert!(commutator_residual(&f, 3).is_err());
    }

    #[test]
    fn linearity() {
        let g = grid(13);
        let a = ScalarField::sample(&g, |c| (c[0] + c[2]).sin()).unwrap();
        let b = ScalarField::sample(&g, |c| (c[1] * c[2]).exp()).unwrap();
        let lhs = grushin_laplacian(&a.scale(2.0).add(&b.scale(-3.0)).unwrap()).unwrap();
        let rhs = grushin_laplacian(&a).unwrap().scale(2.0).add(&grushin_laplacian(&b).unwrap().scale(-3.0)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn mask_exhaustion_is_reported() {
        let g = grid(9);
        let mut f = ScalarField::constant(&g, 1.0);
        for _ in 0..3 {
            f = grushin_laplacian(&f).unwrap();
        }
        assert!(matches!(grushin_laplacian(&f), Err(Error::MaskExhausted { .. })));
        assert_eq!(max_margin(&f), 3);
    }
}
