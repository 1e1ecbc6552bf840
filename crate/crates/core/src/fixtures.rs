//! The standard fixture corpus: manufactured pairs, solved boundary value
//! problems and the `ρ²` decay profile.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::{Grid, ScalarField};
use crate::solutions::{homogeneous_pair, manufacture, solve_bvp, BvpOptions, SolutionPair};

/// Names of the certified pairs returned by [`corpus`], in order.
pub const CORPUS: [&str; 7] = ["exp", "cos", "affine", "mixed", "one", "bvp_exp", "bvp_mixed"];

const U_MIN: f64 = 0.1;

fn mixed(m: usize) -> impl Fn(&[f64]) -> f64 + Sync {
    move |c: &[f64]| c[0].exp() + 0.1 * c[m].sin() * c[0] * c[0]
}

/// Builds one named fixture.
pub fn fixture(name: &str, grid: &Arc<Grid>, bvp: &BvpOptions) -> Result<SolutionPair> {
    let m = grid.params().m();
    match name {
        "exp" => manufacture(name, |c| c[0].exp(), grid, U_MIN),
        "cos" => manufacture(name, |c| c[0].cos(), grid, U_MIN),
        "affine" => manufacture(name, |c| 2.0 + c[0], grid, U_MIN),
        "mixed" => manufacture(name, mixed(m), grid, U_MIN),
        "one" => manufacture(name, |_| 1.0, grid, U_MIN),
        "bvp_exp" => {
            let g = ScalarField::sample(grid, |c| c[0].exp())?;
            solve_bvp(name, &ScalarField::constant(grid, 1.0), &g, &g, bvp)
        }
        "bvp_mixed" => {
            let truth = manufacture("mixed", mixed(m), grid, U_MIN)?;
            solve_bvp(name, &truth.v, &truth.u, &truth.w, bvp)
        }
        "rho2" => rho_squared_pair(grid),
        other => Err(invalid(format!("unknown fixture '{other}'"))),
    }
}

/// The seven certified pairs of [`CORPUS`].
pub fn corpus(grid: &Arc<Grid>, bvp: &BvpOptions) -> Result<Vec<SolutionPair>> {
    CORPUS.iter().map(|name| fixture(name, grid, bvp)).collect()
}

/// `(ρ², Δ_X ρ², 0)`, used for decay-rate checks only.
pub fn rho_squared_pair(grid: &Arc<Grid>) -> Result<SolutionPair> {
    let mut p = homogeneous_pair(2.0, grid)?;
    p.label = "rho2".into();
    Ok(p)
}
