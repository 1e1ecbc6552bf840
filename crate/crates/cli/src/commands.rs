use std::path::Path;

use grushin_core::expr::Expression;
use grushin_core::frequency::{
    default_vanishing_radii, monotonicity_profile, sup_bound_check, three_ball_check, vanishing_order_fit, PairFields,
};
use grushin_core::inequalities::{
    caccioppoli_check, hardy_check, moser_ratio_pair, rellich_identity_residual, zu_pointwise_check,
};
use grushin_core::io::{read_pair, write_pair};
use grushin_core::report::{grid_id, InequalityReport, ReportConfig};
use grushin_core::solutions::{manufacture_field, solve_bvp, Provenance, SolutionPair};
use grushin_core::{ScalarField, Result as CoreResult};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{hash_file, Artifacts, InputFile};
use crate::{selftest as suite, CliError};

type Outcome = Result<bool, CliError>;

/// Slack allowed on the pointwise Zu bound, relative to its scale.
const ZU_ROUNDOFF: f64 = 64.0 * f64::EPSILON;

fn sample_expr(cfg: &RunConfig, source: &str) -> Result<ScalarField, CliError> {
    let grid = cfg.grid().map_err(CliError::Usage)?;
    let expr = Expression::parse(source, grid.params())?;
    Ok(ScalarField::try_sample(&grid, |c| expr.eval(c))?)
}

fn load_pair(cfg: &RunConfig, inputs: &mut Vec<InputFile>, path: &Path) -> Result<SolutionPair, CliError> {
    inputs.push(hash_file(path)?);
    let pair = read_pair(path)?;
    let want = cfg.grid().map_err(CliError::Usage)?;
    let got = pair.grid();
    if got.params() != want.params() || got.spec() != want.spec() {
        return Err(CliError::Usage(format!(
            "grid mismatch: {} holds {}, config describes {}",
            path.display(),
            grid_id(got),
            grid_id(&want)
        )));
    }
    Ok(pair)
}

fn pair_summary(pair: &SolutionPair) -> Value {
    json!({
        "label": pair.label,
        "certified": pair.certified(),
        "residual_1": pair.residual_1,
        "residual_2": pair.residual_2,
        "residual_scale": pair.residual_scale,
        "k": pair.k,
        "provenance": pair.provenance,
    })
}

fn pair_notes(pair: &SolutionPair) -> Vec<String> {
    let mut notes = Vec::new();
    if !pair.certified() {
        notes.push(format!("pair '{}' is not certified as a solution", pair.label));
    }
    if pair.u.max_abs() == 0.0 && pair.w.max_abs() == 0.0 {
        notes.push("trivial solution: u and w vanish identically".into());
    }
    notes
}

fn persist(art: &Artifacts, pair: &SolutionPair, notes: &[String]) -> Outcome {
    let field_path = art.path(&format!("{}.grf", pair.label))?;
    write_pair(&field_path, pair, art.field_meta())?;
    let json_path = art.write_json(&format!("{}.json", pair.label), pair.certified(), notes, pair_summary(pair))?;
    println!(
        "{}: '{}' certified={} K1={:.6e} K2={:.6e} -> {}, {}",
        art.command,
        pair.label,
        pair.certified(),
        pair.k1(),
        pair.k2(),
        field_path.display(),
        json_path.display()
    );
    Ok(pair.certified())
}

pub fn selftest(cfg: &RunConfig, inputs: Vec<InputFile>) -> Outcome {
    let art = Artifacts { command: "selftest", config: cfg, inputs };
    let checks = suite::run(cfg).map_err(CliError::Usage)?;
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!("{} {}: {:.3e} (tol {:.1e}, {} samples)", if c.pass { "ok  " } else { "FAIL" }, c.name, c.max_error, c.tol, c.samples);
    }
    let path = art.write_json("selftest.json", pass, &[], json!({ "checks": checks }))?;
    println!("selftest: pass={pass} -> {}", path.display());
    Ok(pass)
}

pub fn manufacture(cfg: &RunConfig, inputs: Vec<InputFile>, u: &str, label: &str) -> Outcome {
    let art = Artifacts { command: "manufacture", config: cfg, inputs };
    let field = sample_expr(cfg, u)?;
    let pair = manufacture_field(label, field, cfg.u_min)?;
    let mut notes = pair_notes(&pair);
    notes.push(format!("u = {u}"));
    persist(&art, &pair, &notes)
}

pub fn solve(cfg: &RunConfig, inputs: Vec<InputFile>, v: &str, gu: &str, gw: &str, label: &str) -> Outcome {
    let art = Artifacts { command: "solve", config: cfg, inputs };
    let bvp = cfg.bvp().map_err(CliError::Usage)?;
    let pair = solve_bvp(label, &sample_expr(cfg, v)?, &sample_expr(cfg, gu)?, &sample_expr(cfg, gw)?, &bvp)?;
    let mut notes = pair_notes(&pair);
    if let Provenance::Solved { log } = &pair.provenance {
        notes.push(format!("{} iterations, relative residual {:.3e}", log.iterations, log.relative_residual));
    }
    notes.push(format!("V = {v}; g_u = {gu}; g_w = {gw}"));
    persist(&art, &pair, &notes)
}

pub fn frequency(cfg: &RunConfig, mut inputs: Vec<InputFile>, pair: &Path) -> Outcome {
    let pair = load_pair(cfg, &mut inputs, pair)?;
    let art = Artifacts { command: "frequency", config: cfg, inputs };
    let fields = PairFields::new(&pair)?;
    let profile = monotonicity_profile(&fields, &cfg.radii().map_err(CliError::Usage)?, &cfg.frequency().map_err(CliError::Usage)?)?;
    let mut notes = pair_notes(&pair);
    let degenerate = profile.verdict.degenerate_radii;
    if degenerate > 0 {
        notes.push(format!("degenerate frequency: H below floor at {degenerate} of {} radii", profile.rows.len()));
    }
    let pass = profile.verdict.pass;
    let csv = art.write_csv(&format!("{}.frequency.csv", pair.label), &profile.to_csv())?;
    let mut result = serde_json::to_value(&profile)?;
    result["degenerate"] = json!(degenerate > 0);
    let js = art.write_json(&format!("{}.frequency.json", pair.label), pass, &notes, result)?;
    println!(
        "frequency: '{}' monotone={pass} max_violation={:.3e} max|M|={:.3e} degenerate_radii={degenerate} -> {}, {}",
        pair.label,
        profile.verdict.max_violation,
        profile.verdict.max_abs_m,
        csv.display(),
        js.display()
    );
    Ok(pass)
}

pub fn three_ball(cfg: &RunConfig, mut inputs: Vec<InputFile>, pair: &Path, r: [f64; 3]) -> Outcome {
    let pair = load_pair(cfg, &mut inputs, pair)?;
    let art = Artifacts { command: "three-ball", config: cfg, inputs };
    let fields = PairFields::new(&pair)?;
    let rep = three_ball_check(&fields, r[0], r[1], r[2], &cfg.frequency().map_err(CliError::Usage)?)?;
    let js = art.write_json(&format!("{}.three_ball.json", pair.label), rep.pass, &pair_notes(&pair), serde_json::to_value(&rep)?)?;
    println!("three-ball: '{}' pass={} lhs={:.6e} rhs={:.6e} -> {}", pair.label, rep.pass, rep.lhs, rep.rhs, js.display());
    Ok(rep.pass)
}

enum Job {
    Hardy(f64, f64),
    Rellich,
    Zu(&'static str),
    Caccioppoli,
    Moser,
}

fn run_job(cfg: &RunConfig, pair: &SolutionPair, job: &Job) -> CoreResult<Vec<InequalityReport>> {
    let rc = |r: Option<f64>, alpha: Option<f64>| ReportConfig {
        r,
        alpha,
        grid_id: grid_id(pair.grid()),
        field_id: pair.label.clone(),
    };
    Ok(match *job {
        Job::Hardy(r, alpha) => {
            let (a, b) = hardy_check(&pair.u, r, alpha)?;
            vec![a, b]
        }
        Job::Rellich => {
            let res = rellich_identity_residual(&pair.u, cfg.rellich_r, cfg.alpha)?;
            let rep = InequalityReport::new("rellich_residual", res.residual, cfg.rellich_tol, 0.0, rc(Some(cfg.rellich_r), Some(cfg.alpha)))
                .note(format!("identity sides {:.6e} and {:.6e}", res.lhs, res.rhs));
            vec![rep]
        }
        Job::Zu(which) => {
            let f = if which == "u" { &pair.u } else { &pair.w };
            let zu = zu_pointwise_check(f, cfg.psi_min)?;
            let rep = InequalityReport::new(format!("zu_pointwise_{which}"), zu.max_violation, ZU_ROUNDOFF * zu.scale, 0.0, rc(None, None))
                .note(format!("max of |Zf| - rho psi^(-1/2) |Xf| over {} nodes with psi >= {}", zu.nodes, cfg.psi_min));
            vec![rep]
        }
        Job::Caccioppoli => vec![caccioppoli_check(pair, cfg.caccioppoli_r, cfg.c_cacc)?],
        Job::Moser => {
            let s = cfg.moser_exponent();
            let m = moser_ratio_pair(pair, s, cfg.moser_radius)?;
            let rep = InequalityReport::new("moser_ratio", m.ratio, f64::MAX, 0.0, rc(Some(cfg.moser_radius), None))
                .note(format!("s = {s}; passes when the ratio is finite; sup = {:.6e}, L2 = {:.6e}, Ls = {:.6e}", m.sup, m.l2, m.ls));
            vec![rep]
        }
    })
}

const REPORT_CSV_HEADER: &str = "name,r,alpha,lhs,rhs,slack,tol,pass";

fn reports_csv(reports: &[InequalityReport]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        out += &format!(
            "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.name,
            opt(r.config.r),
            opt(r.config.alpha),
            r.lhs,
            r.rhs,
            r.slack,
            r.tol,
            r.pass
        );
    }
    out
}

pub fn inequalities(cfg: &RunConfig, mut inputs: Vec<InputFile>, pair: &Path) -> Outcome {
    let pair = load_pair(cfg, &mut inputs, pair)?;
    let art = Artifacts { command: "inequalities", config: cfg, inputs };
    let mut jobs: Vec<Job> = Vec::new();
    for &r in &cfg.hardy_radii {
        for &a in &cfg.hardy_alphas {
            jobs.push(Job::Hardy(r, a));
        }
    }
    jobs.extend([Job::Rellich, Job::Zu("u"), Job::Zu("w"), Job::Caccioppoli, Job::Moser]);
    let batches: Vec<Vec<InequalityReport>> =
        jobs.par_iter().map(|j| run_job(cfg, &pair, j)).collect::<CoreResult<_>>()?;
    let reports: Vec<InequalityReport> = batches.into_iter().flatten().collect();
    let pass = reports.iter().all(|r| r.pass);
    for r in &reports {
        println!("{} {}: lhs={:.6e} rhs={:.6e}", if r.pass { "ok  " } else { "FAIL" }, r.name, r.lhs, r.rhs);
    }
    let csv = art.write_csv(&format!("{}.inequalities.csv", pair.label), &reports_csv(&reports))?;
    let js = art.write_json(&format!("{}.inequalities.json", pair.label), pass, &pair_notes(&pair), serde_json::to_value(&reports)?)?;
    println!("inequalities: '{}' {} reports pass={pass} -> {}, {}", pair.label, reports.len(), csv.display(), js.display());
    Ok(pass)
}

pub fn vanishing_order(cfg: &RunConfig, mut inputs: Vec<InputFile>, pair: &Path) -> Outcome {
    let pair = load_pair(cfg, &mut inputs, pair)?;
    let art = Artifacts { command: "vanishing-order", config: cfg, inputs };
    let radii = default_vanishing_radii();
    let fields = PairFields::new(&pair)?;
    let fit = vanishing_order_fit(&fields, &radii, &cfg.frequency().map_err(CliError::Usage)?)?;
    let bound = sup_bound_check(&pair, &radii)?;
    let js = art.write_json(
        &format!("{}.vanishing_order.json", pair.label),
        bound.pass,
        &pair_notes(&pair),
        json!({ "fit": fit, "bound": bound }),
    )?;
    println!(
        "vanishing-order: '{}' order={:.4} exponent={:.4} bound={:.4e} pass={} -> {}",
        pair.label,
        fit.order_estimate,
        bound.lhs,
        bound.rhs,
        bound.pass,
        js.display()
    );
    Ok(bound.pass)
}
