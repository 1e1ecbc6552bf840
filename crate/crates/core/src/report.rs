use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Where an inequality was evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    pub grid_id: String,
    pub field_id: String,
}

/// One side-by-side evaluation of `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
    pub config: ReportConfig,
    pub notes: Vec<String>,
}

impl InequalityReport {
    /// Passes iff `rhs − lhs ≥ −tol·|rhs|`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64, config: ReportConfig) -> Self {
        let slack = rhs - lhs;
        let pass = lhs.is_finite() && rhs.is_finite() && slack >= -tol * rhs.abs();
        Self { name: name.into(), lhs, rhs, slack, tol, pass, config, notes: Vec::new() }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Short stable identifier of a grid, e.g. `m3n1b1-[33,33,33,33]@[-1.2,1.2]`.
pub fn grid_id(grid: &Grid) -> String {
    let p = grid.params();
    let s = grid.spec();
    let uniform = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    let bounds = if uniform(&s.lower) && uniform(&s.upper) {
        format!("[{},{}]", s.lower[0], s.upper[0])
    } else {
        format!("{:?}..{:?}", s.lower, s.upper)
    };
    format!("m{}n{}b{}-{:?}@{}", p.m(), p.n(), p.beta(), s.counts, bounds).replace(' ', "")
}

pub(crate) fn config(grid: &Grid, field_id: &str, r: Option<f64>, alpha: Option<f64>) -> ReportConfig {
    ReportConfig { r, alpha, grid_id: grid_id(grid), field_id: field_id.to_string() }
}
