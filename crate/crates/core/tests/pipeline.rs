use grushin_core::expr::Expression;
use grushin_core::fixtures::fixture;
use grushin_core::frequency::{geometric_radii, monotonicity_profile, three_ball_check, FrequencyConfig, PairFields};
use grushin_core::inequalities::{caccioppoli_check, moser_ratio_pair, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC, MOSER_RADIUS};
use grushin_core::io::{read_pair, write_pair};
use grushin_core::solutions::{manufacture_field, BvpOptions};
use grushin_core::{Error, Grid, GrushinParams, ScalarField};

fn grid(counts: usize) -> std::sync::Arc<Grid> {
    Grid::cube(GrushinParams::new(3, 1, 1.0).unwrap(), 1.2, counts).unwrap()
}

#[test]
fn expression_pair_survives_round_trip() {
    let g = grid(9);
    let e = Expression::parse("exp(x1) + 0.1*sin(y1)*x1^2", g.params()).unwrap();
    let u = ScalarField::try_sample(&g, |c| e.eval(c)).unwrap();
    let pair = manufacture_field("expr", u, 0.1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.grf");
    write_pair(&path, &pair, serde_json::json!({ "note": "test" })).unwrap();
    let back = read_pair(&path).unwrap();
    assert_eq!(back.label, "expr");
    assert_eq!(back.u.data().len(), pair.u.data().len());
    for (a, b) in back.u.data().iter().zip(pair.u.data()) {
        assert!(a == b || (a.is_nan() && b.is_nan()));
    }
    assert_eq!(back.k1(), pair.k1());
    assert_eq!(back.certified(), pair.certified());
}

#[test]
fn profile_is_independent_of_thread_count() {
    let g = grid(17);
    let pair = fixture("mixed", &g, &BvpOptions::default()).unwrap();
    let radii = geometric_radii(0.15, 0.75, 12).unwrap();
    let csv = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            grushin_core::quadrature::clear_rule_cache();
            let f = PairFields::new(&pair).unwrap();
            monotonicity_profile(&f, &radii, &FrequencyConfig::default()).unwrap().to_csv()
        })
    };
    let one = csv(1);
    assert_eq!(one, csv(3));
    assert_eq!(one.lines().count(), 13);
}

#[test]
fn ratios_are_scale_invariant() {
    let g = grid(17);
    let pair = fixture("cos", &g, &BvpOptions::default()).unwrap();
    let big = pair.scaled(7.5).unwrap();
    let a = caccioppoli_check(&pair, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC).unwrap();
    let b = caccioppoli_check(&big, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC).unwrap();
    assert!(((a.lhs - b.lhs) / a.lhs).abs() < 1e-12);
    let ma = moser_ratio_pair(&pair, 3.0, MOSER_RADIUS).unwrap().ratio;
    let mb = moser_ratio_pair(&big, 3.0, MOSER_RADIUS).unwrap().ratio;
    assert!(((ma - mb) / ma).abs() < 1e-12);
}

#[test]
fn three_ball_rejects_bad_ordering() {
    let g = grid(9);
    let pair = fixture("exp", &g, &BvpOptions::default()).unwrap();
    let f = PairFields::new(&pair).unwrap();
    let cfg = FrequencyConfig::default();
    assert!(matches!(three_ball_check(&f, 0.1, 0.25, 0.45, &cfg), Err(Error::RadiusOrdering(_))));
    assert!(matches!(three_ball_check(&f, 0.3, 0.25, 0.75, &cfg), Err(Error::RadiusOrdering(_))));
}
