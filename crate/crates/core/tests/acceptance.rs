//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::sync::Arc;
use std::time::Instant;

use grushin_core::fixtures::{corpus, fixture, rho_squared_pair};
use grushin_core::frequency::{
    default_vanishing_radii, geometric_radii, h_prime_identity_check, h_prime_observed_order, monotonicity_profile,
    sup_bound_check, three_ball_check, vanishing_order_fit, FrequencyConfig, PairFields,
};
use grushin_core::geometry::{angle_psi, dilate, pseudo_gauge, x_grad_rho};
use grushin_core::inequalities::{
    caccioppoli_check, hardy_check, moser_ratio_pair, rellich_identity_residual, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC,
    MOSER_RADIUS,
};
use grushin_core::ops::{commutator_residual, grushin_laplacian, x_derivative, z_derivative};
use grushin_core::quadrature::{ball_integral, clear_rule_cache, mc_ball_integral, WeightSpec};
use grushin_core::solutions::{manufacture, solve_bvp, BvpOptions, KrylovOptions, Provenance, SolutionPair};
use grushin_core::{Grid, GrushinParams, Point, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const HALF: f64 = 1.2;
const DEFAULT_COUNTS: usize = 33;
const COARSE_COUNTS: usize = 17;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Suite {
    failures: Vec<usize>,
}

impl Suite {
    fn run(&mut self, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2} {name}: {} ({:.1} s)", o.detail, t.elapsed().as_secs_f64());
        if !o.pass {
            self.failures.push(id);
        }
    }
}

fn params() -> GrushinParams {
    GrushinParams::new(3, 1, 1.0).unwrap()
}

fn grid(counts: usize) -> Arc<Grid> {
    Grid::cube(params(), HALF, counts).unwrap()
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Max of `|a − exact|` over valid nodes of `a` satisfying `keep`.
fn max_error(a: &ScalarField, exact: impl Fn(&[f64]) -> f64, keep: impl Fn(&[f64]) -> bool) -> f64 {
    let g = a.grid();
    let mut c = vec![0.0; g.dim()];
    let mut e: f64 = 0.0;
    for i in a.valid_indices() {
        g.node_coords(i, &mut c);
        if keep(&c) {
            e = e.max((a.get(i) - exact(&c)).abs());
        }
    }
    e
}

fn within_box(c: &[f64], half: f64) -> bool {
    c.iter().all(|v| v.abs() <= half)
}

fn c1_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sets = [params(), GrushinParams::new(2, 2, 0.5).unwrap(), GrushinParams::new(1, 2, 0.25).unwrap()];
    let (mut e_rho, mut e_psi, mut e_grad) = (0.0f64, 0.0f64, 0.0f64);
    let total = 100_000;
    for k in 0..total {
        let p = sets[k % sets.len()];
        let coords: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-HALF..HALF)).collect();
        let a = (rng.random_range(-1.5f64..1.5)).exp();
        let pt = Point::from_coords(&p, &coords).unwrap();
        let rho = pseudo_gauge(&p, &pt).unwrap();
        let psi = angle_psi(&p, &pt).unwrap();
        let d = dilate(&p, a, &pt).unwrap();
        e_rho = e_rho.max((pseudo_gauge(&p, &d).unwrap() - a * rho).abs() / (a * rho));
        e_psi = e_psi.max((angle_psi(&p, &d).unwrap() - psi).abs());
        let g: f64 = x_grad_rho(&p, &pt).unwrap().iter().map(|v| v * v).sum();
        e_grad = e_grad.max((g - psi).abs());
    }
    let tol = 1e-12;
    outcome(
        e_rho <= tol && e_psi <= tol && e_grad <= tol,
        format!("{total} points, rho homogeneity {e_rho:.2e}, psi invariance {e_psi:.2e}, |X rho|^2 - psi {e_grad:.2e} (tol {tol:.0e})"),
    )
}

type Closed = fn(&[f64]) -> f64;

fn c2_operator_convergence() -> Outcome {
    let p = GrushinParams::new(2, 1, 1.0).unwrap();
    let rho2 = |c: &[f64]| ((c[0] * c[0] + c[1] * c[1]).powi(2) + 4.0 * c[2] * c[2]).sqrt();
    let cases: [(&str, Closed, Closed, Closed); 4] = [
        ("exp(x1)", |c| c[0].exp(), |c| c[0].exp(), |c| c[0] * c[0].exp()),
        ("cos(x1)", |c| c[0].cos(), |c| -c[0].cos(), |c| -c[0] * c[0].sin()),
        ("x1^3", |c| c[0].powi(3), |c| 6.0 * c[0], |c| 3.0 * c[0].powi(3)),
        (
            "rho^2",
            |c| ((c[0] * c[0] + c[1] * c[1]).powi(2) + 4.0 * c[2] * c[2]).sqrt(),
            |c| {
                let x2 = c[0] * c[0] + c[1] * c[1];
                8.0 * x2 / (x2 * x2 + 4.0 * c[2] * c[2]).sqrt()
            },
            |c| 2.0 * ((c[0] * c[0] + c[1] * c[1]).powi(2) + 4.0 * c[2] * c[2]).sqrt(),
        ),
    ];
    let _ = rho2;
    let counts = [17, 33, 65];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f, lap, z) in cases {
        let keep = |c: &[f64]| within_box(c, 1.0) && (name != "rho^2" || (c[0] * c[0] + c[1] * c[1]).sqrt() > 0.1);
        let mut el = Vec::new();
        let mut ez = Vec::new();
        for &n in &counts {
            let g = Grid::cube(p, HALF, n).unwrap();
            let u = ScalarField::sample(&g, f).unwrap();
            el.push(max_error(&grushin_laplacian(&u).unwrap(), lap, keep));
            ez.push(max_error(&z_derivative(&u).unwrap(), z, keep));
        }
        for (op, e) in [("lap", &el), ("Z", &ez)] {
            let exact = e.iter().all(|&v| v <= 1e-10);
            let ratios = [e[0] / e[1], e[1] / e[2]];
            let ok = exact || ratios.iter().all(|r| (3.5..=4.5).contains(r));
            pass &= ok;
            if exact {
                parts.push(format!("{name} {op} exact to round-off"));
            } else {
                parts.push(format!("{name} {op} ratios {:.2}/{:.2}{}", ratios[0], ratios[1], if ok { "" } else { " (out of range)" }));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

struct Corpus {
    grid: Arc<Grid>,
    pairs: Vec<SolutionPair>,
    build_secs: f64,
}

fn build_corpus(counts: usize) -> Corpus {
    let t = Instant::now();
    let grid = grid(counts);
    let pairs = corpus(&grid, &BvpOptions::default()).unwrap();
    Corpus { grid, pairs, build_secs: t.elapsed().as_secs_f64() }
}

fn axis_ratio(u: &ScalarField, k: usize, keep: &(dyn Fn(usize) -> bool + Sync)) -> (f64, f64) {
    let res = commutator_residual(u, k).unwrap().max_abs_where(keep).unwrap();
    let xn = x_derivative(u, k).unwrap().max_abs_where(keep).unwrap();
    (res, xn)
}

fn c3_commutator(c33: &Corpus) -> Outcome {
    let g = &c33.grid;
    let x2 = g.x2();
    let mut fields: Vec<(String, ScalarField, bool)> = vec![
        ("exp(x1)".into(), ScalarField::sample(g, |c| c[0].exp()).unwrap(), false),
        ("cos(x1)".into(), ScalarField::sample(g, |c| c[0].cos()).unwrap(), false),
        ("x1^3".into(), ScalarField::sample(g, |c| c[0].powi(3)).unwrap(), false),
        ("rho^2".into(), ScalarField::rho(g).map(|v| v * v), true),
    ];
    fields.extend(c33.pairs.iter().map(|p| (p.label.clone(), p.u.clone(), false)));
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (name, u, away) in &fields {
        let keep = |i: usize| !*away || x2[i] > 0.01;
        for k in 0..g.dim() {
            let (res, xn) = axis_ratio(u, k, &keep);
            let ok = if xn > 0.0 { res <= 1e-2 * xn } else { res <= 1e-12 };
            if xn > 0.0 {
                worst = worst.max(res / xn);
            }
            if !ok {
                bad.push(format!("{name} axis {k} {:.2e}", res / xn));
            }
        }
    }
    let mut pass = bad.is_empty();
    let mut orders = Vec::new();
    let funcs: [(&str, Closed); 4] = [
        ("exp", |c| c[0].exp()),
        ("cos", |c| c[0].cos()),
        ("x1^3", |c| c[0].powi(3)),
        ("mixed", |c| c[0].exp() + 0.1 * c[3].sin() * c[0] * c[0]),
    ];
    for (name, f) in funcs {
        let e: Vec<f64> = [COARSE_COUNTS, DEFAULT_COUNTS]
            .iter()
            .map(|&n| {
                let u = ScalarField::sample(&grid(n), f).unwrap();
                (0..4)
                    .map(|k| max_error(&commutator_residual(&u, k).unwrap(), |_| 0.0, |c| within_box(c, 1.0)))
                    .fold(0.0, f64::max)
            })
            .collect();
        let o = order(e[0], e[1]);
        pass &= (1.5..=2.5).contains(&o);
        orders.push(format!("{name} {o:.2}"));
    }
    outcome(
        pass,
        format!(
            "{} fields x {} axes, worst residual / max|X_i f| = {worst:.2e} (tol 1e-2){}; observed order 17->33: {}",
            fields.len(),
            g.dim(),
            if bad.is_empty() { String::new() } else { format!(", over tolerance: {}", bad.join(", ")) },
            orders.join(", ")
        ),
    )
}

fn c4_fundamental() -> Outcome {
    let p = params();
    let mut errs = Vec::new();
    for n in [COARSE_COUNTS, DEFAULT_COUNTS] {
        let g = grid(n);
        let q = p.homogeneous_dimension();
        let gamma = ScalarField::rho(&g).map(|r| r.powf(2.0 - q));
        let lap = grushin_laplacian(&gamma).unwrap();
        let (rho, x2) = (g.rho(), g.x2());
        errs.push(lap.max_abs_where(|i| (0.3..=0.9).contains(&rho[i]) && x2[i] >= 0.09).unwrap());
    }
    let pass = errs[1] <= 5e-2 && errs[1] < errs[0];
    outcome(
        pass,
        format!(
            "max |Lap rho^(2-Q)| on 0.3<=rho<=0.9, |x|>=0.3: {:.3e} at 17, {:.3e} at 33 (tol 5e-2, must decrease); \
             fourth derivatives near |x|=0.3 are O(1e4), so centred truncation error dominates at these spacings",
            errs[0], errs[1]
        ),
    )
}

fn c5_quadrature(g: &Arc<Grid>) -> Outcome {
    let one = ScalarField::constant(g, 1.0);
    let grid_val = ball_integral(&one, 0.8, WeightSpec::psi()).unwrap().value;
    let mc = mc_ball_integral(g.params(), |_| 1.0, 0.8, WeightSpec::psi(), 1_000_000, SEED).unwrap();
    let ok_mc = (grid_val - mc.value).abs() <= 3.0 * mc.stderr + 0.01 * mc.value.abs();
    let v8 = ball_integral(&one, 0.8, WeightSpec::plain()).unwrap().value;
    let v4 = ball_integral(&one, 0.4, WeightSpec::plain()).unwrap().value;
    let target = 2f64.powf(g.params().homogeneous_dimension());
    let ratio = v8 / v4;
    let ok_ratio = (ratio / target - 1.0).abs() <= 0.02;
    outcome(
        ok_mc && ok_ratio,
        format!(
            "int psi over B_0.8: grid {grid_val:.5e} vs MC {:.5e} +- {:.1e}; vol(B_0.8)/vol(B_0.4) = {ratio:.3} vs 2^Q = {target}",
            mc.value, mc.stderr
        ),
    )
}

fn energy_gap(g: &Arc<Grid>) -> Vec<f64> {
    let pair = manufacture("exp", |c| c[0].exp(), g, 0.1).unwrap();
    let f = PairFields::new(&pair).unwrap();
    drop(pair);
    [0.3, 0.5, 0.7]
        .iter()
        .map(|&r| {
            let i = f.energy(r, 4.0, None).unwrap();
            let alt = f.energy_alt(r, 4.0).unwrap();
            (i - alt).abs() / i.abs()
        })
        .collect()
}

fn c6_energy_forms(g33: &Arc<Grid>) -> Outcome {
    let a = energy_gap(g33);
    clear_rule_cache();
    let b = energy_gap(&grid(49));
    clear_rule_cache();
    let pass = a.iter().all(|&v| v <= 0.05) && b.iter().all(|&v| v <= 0.025);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join("/");
    outcome(pass, format!("|I - I_alt|/|I| at r=0.3/0.5/0.7: 33 lines {} (tol 5e-2), 49 lines {} (tol 2.5e-2)", fmt(&a), fmt(&b)))
}

fn c7_first_variation(g33: &Arc<Grid>) -> Outcome {
    let pair = manufacture("exp", |c| c[0].exp(), g33, 0.1).unwrap();
    let f = PairFields::new(&pair).unwrap();
    let cfg = FrequencyConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [0.3, 0.5, 0.7] {
        let a = h_prime_identity_check(&f, 4.0, r, 0.01, &cfg).unwrap();
        let b = h_prime_identity_check(&f, 4.0, r, 0.005, &cfg).unwrap();
        let o = h_prime_observed_order(&f, 4.0, r, 0.01).unwrap();
        pass &= !a.degenerate && a.residual <= 0.02 && b.residual <= a.residual;
        parts.push(format!(
            "r={r}: {:.2e} -> {:.2e} (plain difference {:.2e} -> {:.2e}, order in dr {o:.2})",
            a.residual, b.residual, a.residual_plain, b.residual_plain
        ));
    }
    outcome(pass, format!("residual at dr=0.01 -> 0.005: {} (tol 2e-2)", parts.join("; ")))
}

fn profiles_csv(c: &Corpus) -> (bool, Vec<String>, String) {
    let radii = geometric_radii(0.15, 0.75, 12).unwrap();
    let cfg = FrequencyConfig::default();
    let mut all = true;
    let mut csvs = Vec::new();
    let mut worst = String::new();
    let mut worst_rel = f64::NEG_INFINITY;
    for pair in &c.pairs {
        let f = PairFields::new(pair).unwrap();
        let p = monotonicity_profile(&f, &radii, &cfg).unwrap();
        all &= p.verdict.pass && p.verdict.degenerate_radii == 0;
        let rel = p.verdict.max_violation / p.verdict.max_abs_m;
        if rel > worst_rel {
            worst_rel = rel;
            worst = format!("{} ({rel:.2e})", pair.label);
        }
        csvs.push(format!("# {}\n{}", pair.label, p.to_csv()));
    }
    (all, csvs, worst)
}

fn c8_monotonicity(c33: &Corpus, csv_out: &mut Vec<String>) -> Outcome {
    let t = Instant::now();
    let certified = c33.pairs.iter().filter(|p| p.certified()).count();
    let solved = c33.pairs.iter().filter(|p| matches!(p.provenance, Provenance::Solved { .. })).count();
    let (all, csvs, worst) = profiles_csv(c33);
    *csv_out = csvs;
    let total = c33.build_secs + t.elapsed().as_secs_f64();
    let pass = all && certified == c33.pairs.len() && certified >= 5 && solved >= 2 && total < 600.0;
    outcome(
        pass,
        format!(
            "{certified} certified pairs ({solved} solved), 12 radii in [0.15, 0.75]; largest relative drop {worst} (tol 1e-3); \
             corpus build {:.0} s + profiles {:.0} s",
            c33.build_secs,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c9_hardy(c33: &Corpus) -> Outcome {
    let mut pass = true;
    let mut min_rel = f64::INFINITY;
    let mut count = 0;
    for pair in &c33.pairs {
        for r in [0.4, 0.6] {
            for alpha in [2.0, 4.0] {
                let (a, b) = hardy_check(&pair.u, r, alpha).unwrap();
                for rep in [a, b] {
                    pass &= rep.pass && rep.slack > 0.0;
                    min_rel = min_rel.min(rep.slack / rep.rhs);
                    count += 1;
                }
            }
        }
    }
    outcome(pass, format!("{count} reports, smallest relative slack {min_rel:.3e}"))
}

fn c10_rellich(g17: &Arc<Grid>, g33: &Arc<Grid>) -> Outcome {
    let (r, alpha) = (0.8, 4.0);
    let fields = |g: &Arc<Grid>| {
        [
            ("x1", ScalarField::sample(g, |c| c[0]).unwrap()),
            ("rho^2", ScalarField::rho(g).map(|v| v * v)),
        ]
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for ((name, u17), (_, u33)) in fields(g17).into_iter().zip(fields(g33)) {
        let a = rellich_identity_residual(&u17, r, alpha).unwrap().residual;
        let b = rellich_identity_residual(&u33, r, alpha).unwrap().residual;
        let o = order(a, b);
        pass &= b <= 0.02 && o >= 1.0;
        parts.push(format!("{name}: {b:.2e} at 33 lines (17 lines {a:.2e}, order {o:.2})"));
    }
    let small = rellich_identity_residual(&ScalarField::rho(g33).map(|v| v * v), 0.6, alpha).unwrap().residual;
    outcome(pass, format!("r={r}, alpha={alpha}: {} (tol 2e-2, order >= 1); rho^2 at r=0.6: {small:.2e}", parts.join("; ")))
}

fn c11_three_ball(c33: &Corpus) -> Outcome {
    let cfg = FrequencyConfig::default();
    let mut pass = true;
    let mut min_ratio = f64::INFINITY;
    for pair in &c33.pairs {
        let f = PairFields::new(pair).unwrap();
        let rep = three_ball_check(&f, 0.1, 0.25, 0.75, &cfg).unwrap();
        pass &= rep.pass;
        min_ratio = min_ratio.min(rep.rhs / rep.lhs);
    }
    outcome(pass, format!("{} pairs at (0.1, 0.25, 0.75); smallest rhs/lhs {min_ratio:.3e}", c33.pairs.len()))
}

fn stable(a: f64, b: f64) -> bool {
    (a == 0.0 && b == 0.0) || (a - b).abs() <= 0.2 * b.abs()
}

fn c12_caccioppoli(c17: &Corpus, c33: &Corpus) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut max33: f64 = 0.0;
    for (p17, p33) in c17.pairs.iter().zip(&c33.pairs) {
        let a = caccioppoli_check(p17, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC).unwrap();
        let b = caccioppoli_check(p33, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC).unwrap();
        pass &= stable(a.lhs, b.lhs) && b.pass && a.pass;
        max33 = max33.max(b.lhs);
        parts.push(format!("{} {:.3e}/{:.3e}", p33.label, a.lhs, b.lhs));
    }
    outcome(
        pass,
        format!("R at 17/33 lines: {}; C_cacc = {DEFAULT_C_CACC:.3e} (2 x max at 33 = {:.3e})", parts.join(", "), 2.0 * max33),
    )
}

fn c13_moser(c17: &Corpus, c33: &Corpus) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (p17, p33) in c17.pairs.iter().zip(&c33.pairs) {
        let s = (p33.grid().params().homogeneous_dimension() + 1.0) / 2.0;
        let a = moser_ratio_pair(p17, s, MOSER_RADIUS).unwrap().ratio;
        let b = moser_ratio_pair(p33, s, MOSER_RADIUS).unwrap().ratio;
        pass &= a.is_finite() && b.is_finite() && stable(a, b);
        parts.push(format!("{} {a:.3e}/{b:.3e}", p33.label));
    }
    outcome(pass, format!("s = 3, R = {MOSER_RADIUS}, ratio at 17/33 lines: {}", parts.join(", ")))
}

fn c14_vanishing(c33: &Corpus) -> Outcome {
    let rho2 = rho_squared_pair(&c33.grid).unwrap();
    let f = PairFields::new(&rho2).unwrap();
    let fit = vanishing_order_fit(&f, &default_vanishing_radii(), &FrequencyConfig::default()).unwrap();
    let mut pass = (fit.order_estimate - 2.0).abs() <= 0.3;
    let mut worst: f64 = f64::NEG_INFINITY;
    for pair in c33.pairs.iter().chain(std::iter::once(&rho2)) {
        let rep = sup_bound_check(pair, &default_vanishing_radii()).unwrap();
        pass &= rep.pass;
        worst = worst.max(rep.lhs);
    }
    outcome(
        pass,
        format!(
            "rho^2 order estimate {:.3} (slope {:.3}, target 2 +- 0.3); largest sup-norm exponent over {} fixtures {worst:.3} vs bound >= {:.2e}",
            fit.order_estimate,
            fit.slope,
            c33.pairs.len() + 1,
            grushin_core::frequency::ConstantSet::new(3).unwrap().vanishing_bound(1.0)
        ),
    )
}

fn c15_solver() -> Outcome {
    let mut errs = Vec::new();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut secs_default = 0.0;
    for n in [9, COARSE_COUNTS, DEFAULT_COUNTS] {
        let t = Instant::now();
        let g = grid(n);
        let v = ScalarField::constant(&g, 1.0);
        let truth = ScalarField::sample(&g, |c| c[0].exp()).unwrap();
        let opts = BvpOptions { krylov: KrylovOptions { tol: 1e-8, max_iter: 10_000, ..KrylovOptions::default() }, ..BvpOptions::default() };
        match solve_bvp("bvp_exp", &v, &truth, &truth, &opts) {
            Ok(pair) => {
                let Provenance::Solved { log } = &pair.provenance else { unreachable!() };
                pass &= log.converged && log.relative_residual <= 1e-8 && log.iterations <= 10_000;
                errs.push(pair.u.sub(&truth).unwrap().max_abs());
                parts.push(format!("{n} lines: {} its, residual {:.2e}, error {:.2e}", log.iterations, log.relative_residual, errs.last().unwrap()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{n} lines: {e}"));
            }
        }
        if n == DEFAULT_COUNTS {
            secs_default = t.elapsed().as_secs_f64();
        }
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| order(w[0], w[1])).collect();
    pass &= orders.len() == 2 && orders.iter().all(|o| (1.5..=2.5).contains(o)) && secs_default < 300.0;
    outcome(
        pass,
        format!(
            "{}; observed orders {} (target 2); {secs_default:.1} s at 33 lines",
            parts.join("; "),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c16_determinism(first: &[String]) -> Outcome {
    clear_rule_cache();
    let again = build_corpus(DEFAULT_COUNTS);
    let (_, second, _) = profiles_csv(&again);
    let same = first == second.as_slice() && !first.is_empty();
    let bytes: usize = first.iter().map(String::len).sum();
    outcome(same, format!("{} profile CSVs, {bytes} bytes, rerun byte-identical: {same}", first.len()))
}

fn main() {
    let start = Instant::now();
    let mut suite = Suite { failures: Vec::new() };
    println!("acceptance: m=3, n=1, beta=1, box [-1.2, 1.2]^4, default {DEFAULT_COUNTS} lines per axis, alpha=4, seed {SEED}");

    suite.run(1, "geometry identities", c1_geometry);
    suite.run(2, "operator convergence", c2_operator_convergence);
    let c33 = build_corpus(DEFAULT_COUNTS);
    let c17 = build_corpus(COARSE_COUNTS);
    suite.run(3, "commutator", || c3_commutator(&c33));
    suite.run(4, "fundamental solution", c4_fundamental);
    suite.run(5, "quadrature", || c5_quadrature(&c33.grid));
    suite.run(6, "energy forms", || c6_energy_forms(&c33.grid));
    suite.run(7, "first variation of H", || c7_first_variation(&c33.grid));
    let mut csvs = Vec::new();
    suite.run(8, "monotonicity", || c8_monotonicity(&c33, &mut csvs));
    suite.run(9, "hardy", || c9_hardy(&c33));
    suite.run(10, "rellich", || c10_rellich(&c17.grid, &c33.grid));
    suite.run(11, "three-ball", || c11_three_ball(&c33));
    suite.run(12, "caccioppoli", || c12_caccioppoli(&c17, &c33));
    suite.run(13, "moser", || c13_moser(&c17, &c33));
    suite.run(14, "vanishing order", || c14_vanishing(&c33));
    drop(c17);
    suite.run(15, "solver", c15_solver);
    drop(c33);
    suite.run(16, "determinism", || c16_determinism(&csvs));

    let _ = fixture;
    println!(
        "acceptance: {} of 16 passed in {:.0} s{}",
        16 - suite.failures.len(),
        start.elapsed().as_secs_f64(),
        if suite.failures.is_empty() { String::new() } else { format!("; failed: {:?}", suite.failures) }
    );
    if !suite.failures.is_empty() {
        std::process::exit(1);
    }
}
