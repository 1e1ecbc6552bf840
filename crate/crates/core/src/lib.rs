//! Numerical laboratory for Baouendi-Grushin operators `Δ_X = Δ_x + |x|^{2β} Δ_y`
//! and solutions of the fourth-order system `Δ_X² u = V u`.

pub mod error;
pub mod expr;
pub mod fixtures;
pub mod frequency;
pub mod geometry;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod ops;
pub mod quadrature;
pub mod reduce;
pub mod report;
pub mod solutions;

pub use error::{Error, Result};
pub use geometry::{GrushinParams, Point};
pub use grid::{Grid, GridSpec, ScalarField, VectorField};
