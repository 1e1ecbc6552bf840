//! Run configuration: a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma separated; a single value is broadcast to every axis.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use grushin_core::frequency::{geometric_radii, ConstantMode, FrequencyConfig, ThreeBallExponent};
use grushin_core::solutions::{BvpOptions, KrylovMethod, KrylovOptions};
use grushin_core::{Grid, GridSpec, GrushinParams};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: usize,
    pub n: usize,
    pub beta: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    pub alpha: f64,
    pub radii_lo: f64,
    pub radii_hi: f64,
    pub radii_n: usize,
    pub solver_method: String,
    pub gmres_restart: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub u_min: f64,
    pub psi_min: f64,
    pub h_floor: f64,
    pub constants: String,
    pub three_ball_exponent: String,
    pub monotone_tol: f64,
    pub three_ball_tol: f64,
    pub hardy_radii: Vec<f64>,
    pub hardy_alphas: Vec<f64>,
    pub rellich_r: f64,
    pub rellich_tol: f64,
    pub caccioppoli_r: f64,
    pub c_cacc: f64,
    pub moser_radius: f64,
    /// Zero selects `(Q + 1) / 2`.
    pub moser_s: f64,
    pub selftest_points: usize,
    pub selftest_tol: f64,
    pub commutator_tol: f64,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bvp = KrylovOptions::default();
        let freq = FrequencyConfig::default();
        Self {
            m: 3,
            n: 1,
            beta: 1.0,
            lower: vec![-1.2],
            upper: vec![1.2],
            counts: vec![33],
            alpha: freq.alpha,
            radii_lo: 0.15,
            radii_hi: 0.75,
            radii_n: 12,
            solver_method: "minres".into(),
            gmres_restart: 50,
            solver_tol: bvp.tol,
            solver_max_iter: bvp.max_iter,
            u_min: 0.1,
            psi_min: grushin_core::solutions::DEFAULT_PSI_MIN,
            h_floor: freq.h_floor,
            constants: "proof".into(),
            three_ball_exponent: "fold_k2".into(),
            monotone_tol: freq.monotone_tol,
            three_ball_tol: freq.three_ball_tol,
            hardy_radii: vec![0.4, 0.6],
            hardy_alphas: vec![2.0, 4.0],
            rellich_r: 0.8,
            rellich_tol: 0.02,
            caccioppoli_r: grushin_core::inequalities::CACCIOPPOLI_RADIUS,
            c_cacc: grushin_core::inequalities::DEFAULT_C_CACC,
            moser_radius: grushin_core::inequalities::MOSER_RADIUS,
            moser_s: 0.0,
            selftest_points: 2000,
            selftest_tol: 1e-6,
            commutator_tol: 1e-2,
            seed: 20_240_601,
            workers: 1,
            out: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("{key}: cannot parse '{v}'"))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|s| num(key, s)).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "m" => self.m = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "half" => {
                let h: f64 = num(key, v)?;
                self.lower = vec![-h];
                self.upper = vec![h];
            }
            "lower" => self.lower = list(key, v)?,
            "upper" => self.upper = list(key, v)?,
            "counts" => self.counts = list(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "radii_lo" => self.radii_lo = num(key, v)?,
            "radii_hi" => self.radii_hi = num(key, v)?,
            "radii_n" => self.radii_n = num(key, v)?,
            "solver_method" => self.solver_method = v.to_string(),
            "gmres_restart" => self.gmres_restart = num(key, v)?,
            "solver_tol" => self.solver_tol = num(key, v)?,
            "solver_max_iter" => self.solver_max_iter = num(key, v)?,
            "u_min" => self.u_min = num(key, v)?,
            "psi_min" => self.psi_min = num(key, v)?,
            "h_floor" => self.h_floor = num(key, v)?,
            "constants" => self.constants = v.to_string(),
            "three_ball_exponent" => self.three_ball_exponent = v.to_string(),
            "monotone_tol" => self.monotone_tol = num(key, v)?,
            "three_ball_tol" => self.three_ball_tol = num(key, v)?,
            "hardy_radii" => self.hardy_radii = list(key, v)?,
            "hardy_alphas" => self.hardy_alphas = list(key, v)?,
            "rellich_r" => self.rellich_r = num(key, v)?,
            "rellich_tol" => self.rellich_tol = num(key, v)?,
            "caccioppoli_r" => self.caccioppoli_r = num(key, v)?,
            "c_cacc" => self.c_cacc = num(key, v)?,
            "moser_radius" => self.moser_radius = num(key, v)?,
            "moser_s" => self.moser_s = num(key, v)?,
            "selftest_points" => self.selftest_points = num(key, v)?,
            "selftest_tol" => self.selftest_tol = num(key, v)?,
            "commutator_tol" => self.commutator_tol = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => return Err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, text: &str) -> Result<(), String> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
            self.set(k, v).map_err(|e| format!("line {}: {e}", no + 1))?;
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("m", self.m.to_string());
        kv("n", self.n.to_string());
        kv("beta", self.beta.to_string());
        kv("lower", join(&self.lower));
        kv("upper", join(&self.upper));
        kv("counts", join(&self.counts));
        kv("alpha", self.alpha.to_string());
        kv("radii_lo", self.radii_lo.to_string());
        kv("radii_hi", self.radii_hi.to_string());
        kv("radii_n", self.radii_n.to_string());
        kv("solver_method", self.solver_method.clone());
        kv("gmres_restart", self.gmres_restart.to_string());
        kv("solver_tol", self.solver_tol.to_string());
        kv("solver_max_iter", self.solver_max_iter.to_string());
        kv("u_min", self.u_min.to_string());
        kv("psi_min", self.psi_min.to_string());
        kv("h_floor", self.h_floor.to_string());
        kv("constants", self.constants.clone());
        kv("three_ball_exponent", self.three_ball_exponent.clone());
        kv("monotone_tol", self.monotone_tol.to_string());
        kv("three_ball_tol", self.three_ball_tol.to_string());
        kv("hardy_radii", join(&self.hardy_radii));
        kv("hardy_alphas", join(&self.hardy_alphas));
        kv("rellich_r", self.rellich_r.to_string());
        kv("rellich_tol", self.rellich_tol.to_string());
        kv("caccioppoli_r", self.caccioppoli_r.to_string());
        kv("c_cacc", self.c_cacc.to_string());
        kv("moser_radius", self.moser_radius.to_string());
        kv("moser_s", self.moser_s.to_string());
        kv("selftest_points", self.selftest_points.to_string());
        kv("selftest_tol", self.selftest_tol.to_string());
        kv("commutator_tol", self.commutator_tol.to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        kv("out", self.out.display().to_string());
        s
    }

    pub fn params(&self) -> Result<GrushinParams, String> {
        GrushinParams::new(self.m, self.n, self.beta).map_err(|e| e.to_string())
    }

    fn broadcast<T: Clone>(name: &str, v: &[T], d: usize) -> Result<Vec<T>, String> {
        match v.len() {
            1 => Ok(vec![v[0].clone(); d]),
            l if l == d => Ok(v.to_vec()),
            l => Err(format!("{name} has {l} entries, expected 1 or {d}")),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec, String> {
        let d = self.m + self.n;
        Ok(GridSpec {
            lower: Self::broadcast("lower", &self.lower, d)?,
            upper: Self::broadcast("upper", &self.upper, d)?,
            counts: Self::broadcast("counts", &self.counts, d)?,
        })
    }

    /// Builds the grid; node geometry is computed lazily so this is cheap.
    pub fn grid(&self) -> Result<Arc<Grid>, String> {
        Grid::new(self.params()?, self.grid_spec()?).map_err(|e| e.to_string())
    }

    pub fn radii(&self) -> Result<Vec<f64>, String> {
        geometric_radii(self.radii_lo, self.radii_hi, self.radii_n).map_err(|e| e.to_string())
    }

    pub fn frequency(&self) -> Result<FrequencyConfig, String> {
        let constants = match self.constants.as_str() {
            "proof" => ConstantMode::Proof,
            "statement" => ConstantMode::Statement,
            other => return Err(format!("constants must be 'proof' or 'statement', got '{other}'")),
        };
        let three_ball = match self.three_ball_exponent.as_str() {
            "fold_k2" => ThreeBallExponent::FoldK2,
            "plain" => ThreeBallExponent::Plain,
            other => return Err(format!("three_ball_exponent must be 'fold_k2' or 'plain', got '{other}'")),
        };
        let cfg = FrequencyConfig {
            alpha: self.alpha,
            h_floor: self.h_floor,
            constants,
            three_ball,
            monotone_tol: self.monotone_tol,
            three_ball_tol: self.three_ball_tol,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn bvp(&self) -> Result<BvpOptions, String> {
        let method = match self.solver_method.as_str() {
            "minres" => KrylovMethod::Minres,
            "gmres" => KrylovMethod::Gmres { restart: self.gmres_restart },
            other => return Err(format!("solver_method must be 'minres' or 'gmres', got '{other}'")),
        };
        if !(self.solver_tol > 0.0) || self.solver_max_iter == 0 {
            return Err("solver_tol must be positive and solver_max_iter at least 1".into());
        }
        let krylov = KrylovOptions { method, tol: self.solver_tol, max_iter: self.solver_max_iter, ..KrylovOptions::default() };
        Ok(BvpOptions { krylov, psi_min: self.psi_min })
    }

    /// Checks everything that can be checked before touching a field.
    pub fn validate(&self) -> Result<(), String> {
        self.grid()?;
        self.radii()?;
        self.frequency()?;
        self.bvp()?;
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        let positive = [
            ("u_min", self.u_min),
            ("psi_min", self.psi_min),
            ("rellich_r", self.rellich_r),
            ("caccioppoli_r", self.caccioppoli_r),
            ("c_cacc", self.c_cacc),
            ("moser_radius", self.moser_radius),
            ("selftest_tol", self.selftest_tol),
            ("commutator_tol", self.commutator_tol),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(format!("{k} must be positive, got {v}"));
        }
        if self.hardy_radii.iter().chain(&self.hardy_alphas).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err("hardy_radii and hardy_alphas must be positive".into());
        }
        if self.moser_s < 0.0 {
            return Err("moser_s must be 0 (automatic) or positive".into());
        }
        Ok(())
    }

    pub fn moser_exponent(&self) -> f64 {
        if self.moser_s > 0.0 {
            self.moser_s
        } else {
            (self.m as f64 + (self.beta + 1.0) * self.n as f64 + 1.0) / 2.0
        }
    }
}
