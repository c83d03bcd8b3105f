use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nodembed::architectures::verify_embedding;
use nodembed::constructions::{
    construct_linear, construct_moebius, construct_monomial, construct_negation, construct_polynomial,
    construct_universal, Construction, ConstructionError,
};
use nodembed::funcspec::{Domain, FuncSpec, Grid, Interval};
use nodembed::morse::{diagnose, Verdict};
use nodembed::numeric::max_dist;
use nodembed::odecore::{time_t_map, IntegratorConfig};

fn phi(comps: &str, lo: f64, hi: f64) -> FuncSpec {
    FuncSpec::parse_on("phi", 1, &[comps], Domain(vec![Interval::closed(lo, hi)])).unwrap()
}

#[test]
fn integration_matches_closed_form() {
    let cases: Vec<(Construction, [f64; 2])> = vec![
        (construct_linear(3.0, 1.0).unwrap(), [-2.0, 2.0]),
        (construct_linear(0.25, 2.0).unwrap(), [-2.0, 2.0]),
        (construct_monomial(2.0, 3.0, 1.0).unwrap(), [0.1, 1.5]),
        (construct_monomial(0.5, 0.5, 1.0).unwrap(), [0.1, 3.0]),
        (construct_moebius(1.0, 1.0).unwrap(), [-2.0, 0.9]),
        (construct_moebius(-2.0, 1.0).unwrap(), [-0.45, 2.0]),
        (construct_negation(1.0).unwrap(), [-3.0, 3.0]),
        (construct_polynomial(&[1.0, -1.0, 0.5], 1.0).unwrap(), [0.1, 2.0]),
        (construct_universal(&phi("sin(x0)", -3.0, 3.0), 2.0).unwrap(), [-3.0, 3.0]),
    ];
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (con, [lo, hi]) in cases {
        for _ in 0..32 {
            let x = rng.random_range(lo..hi);
            let t = rng.random_range(0.05..1.0) * con.horizon();
            let h0 = con.arch.initial_state(&[x]).unwrap();
            let integrated = time_t_map(con.arch.field(), &h0, t, &cfg).unwrap();
            let exact = con.closed_form_solution(&[x], t).unwrap();
            let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(
                max_dist(&integrated, &exact) <= 1e-6 * scale,
                "{} at x = {x}, t = {t}: {integrated:?} vs {exact:?}",
                con.id()
            );
        }
    }
}

#[test]
fn moebius_validity_region() {
    let con = construct_moebius(1.0, 1.0).unwrap();
    let v = con.closed_form_solution(&[0.5], 0.5).unwrap()[0];
    assert!((v - 2.0 / 3.0).abs() < 1e-12);
    assert!(matches!(con.closed_form_solution(&[0.9], 1.2), Err(ConstructionError::Validity { .. })));
    assert!(con.arch.evaluate(&[1.0]).is_err());
    assert!((con.arch.evaluate(&[0.5]).unwrap().value[0] - 1.0).abs() < 1e-7);
}

#[test]
fn polynomial_matches_horner() {
    let coeffs = [0.5, -1.25, 0.0, 0.125];
    let con = construct_polynomial(&coeffs, 1.0).unwrap();
    for i in 0..40 {
        let x = 0.1 + 3.9 * i as f64 / 39.0;
        let horner = coeffs.iter().rev().fold(0.0, |acc, a| (acc + a) * x);
        let node = con.arch.evaluate(&[x]).unwrap().value[0];
        assert!((node - horner).abs() <= 1e-6, "x = {x}: {node} vs {horner}");
    }
    assert!(con.arch.evaluate(&[-1.0]).is_err());
    assert_eq!(construct_polynomial(&[1.0], 1.0).unwrap().arch.evaluate(&[1.7]).unwrap().value, vec![1.7]);
}

#[test]
fn universal_embeds_obstructed_maps() {
    let corpus = [
        phi("x0^2", -1.0, 1.0),
        phi("x0^3 - x0", -2.0, 2.0),
        phi("neg(x0)", -1.0, 1.0),
        phi("4*x0^2 - 8*x0 + 1", -1.0, 3.0),
        phi("sin(3*x0)", -2.0, 2.0),
        phi("exp(x0) - x0", -1.0, 1.0),
    ];
    for p in &corpus {
        let grid = Grid::uniform(p.domain().clone(), 64).unwrap();
        let report = diagnose(p, &grid).unwrap();
        assert_eq!(report.verdicts.node1, Verdict::NonEmbeddable, "{:?}", p.component(0).to_string());
        let con = construct_universal(p, 1.0).unwrap();
        let r = verify_embedding(&con.arch, p, &grid, 1e-6).unwrap();
        assert!(r.pass, "{}: max_err {}", p.component(0), r.max_err);
    }
    let planar = FuncSpec::parse_on(
        "phi",
        2,
        &["x0^2 - x1^2", "x0*x1"],
        Domain(vec![Interval::closed(-1.0, 1.0); 2]),
    )
    .unwrap();
    let con = construct_universal(&planar, 1.0).unwrap();
    let grid = Grid::uniform(planar.domain().clone(), 8).unwrap();
    assert!(verify_embedding(&con.arch, &planar, &grid, 1e-6).unwrap().pass);
}

#[test]
fn construction_examples() {
    let mono = construct_monomial(1.0, 2.0, 1.0).unwrap();
    assert!((mono.arch.evaluate(&[3.0]).unwrap().value[0] - 9.0).abs() < 1e-6);
    assert!((mono.closed_form_solution(&[3.0], 0.5).unwrap()[0] - 3f64.powf(2f64.sqrt())).abs() < 1e-12);
    assert_eq!(mono.closed_form_solution(&[1.0], 0.7).unwrap(), vec![1.0]);
    assert!(construct_monomial(1.0, 1.0, 1.0).is_err());
    assert!(construct_monomial(-1.0, 2.0, 1.0).is_err());

    let neg = construct_negation(1.0).unwrap();
    let e = neg.arch.evaluate(&[5.0]).unwrap();
    assert!((e.value[0] + 5.0).abs() < 1e-7);
    assert!(e.defect.unwrap() < 1e-7);
    let half = neg.closed_form_solution(&[2.0], 0.5).unwrap();
    assert!(half[0].abs() < 1e-15 && (half[1] - 2.0).abs() < 1e-15);

    let poly = construct_polynomial(&[2.0, -3.0], 1.0).unwrap();
    assert!((poly.arch.evaluate(&[1.0]).unwrap().value[0] + 1.0).abs() < 1e-6);

    let uni = construct_universal(&phi("x0^3 - x0", -3.0, 3.0), 1.0).unwrap();
    assert!((uni.arch.evaluate(&[2.0]).unwrap().value[0] - 6.0).abs() < 1e-7);
}
