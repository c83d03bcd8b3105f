//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use nodembed::architectures::{verify_embedding, NodeArchitecture, Variant};
use nodembed::constructions::{
    construct_linear, construct_moebius, construct_monomial, construct_negation, construct_polynomial,
    construct_universal, Construction,
};
use nodembed::funcspec::{Domain, FuncSpec, Grid, Interval};
use nodembed::julia::{iterative_logarithm, jabotinsky_flow, julia_residual, monomial_series_solution, PowerSeries, RFunction};
use nodembed::morse::{
    antipodal_point, diagnose, morse_normal_form_1d, morseify, topological_chart_1d, MorseStatus, Verdicts,
};
use nodembed::odecore::{
    check_monotone_1d, check_translation, continuous_dependence, integrate, time_t_map, IntegratorConfig,
    MonotoneVerdict, Status, VectorField,
};
use nodembed::suspension::MappingTorus;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn spec(comps: &[&str], domain: Domain) -> FuncSpec {
    FuncSpec::parse_on("f", domain.dim(), comps, domain).expect("valid expression")
}

fn closed(lo: f64, hi: f64) -> Domain {
    Domain(vec![Interval::closed(lo, hi)])
}

fn grid(lo: f64, hi: f64, n: usize) -> Grid {
    Grid::interval(lo, hi, n).expect("valid grid")
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

/// Each construction with a 64-point grid inside its input domain.
fn constructions() -> Vec<(String, Construction, Grid)> {
    let universal_sin = construct_universal(&spec(&["sin(x0)"], closed(-3.0, 3.0)), 1.0).unwrap();
    let universal_cubic = construct_universal(&spec(&["x0^3 - x0"], closed(-2.0, 2.0)), 1.0).unwrap();
    vec![
        ("linear c=2".into(), construct_linear(2.0, 1.0).unwrap(), grid(-2.0, 2.0, 64)),
        ("linear c=0.5, T=2".into(), construct_linear(0.5, 2.0).unwrap(), grid(-2.0, 2.0, 64)),
        ("monomial c=2, alpha=3".into(), construct_monomial(2.0, 3.0, 1.0).unwrap(), grid(0.1, 2.0, 64)),
        ("monomial c=1, alpha=2".into(), construct_monomial(1.0, 2.0, 1.0).unwrap(), grid(0.1, 3.0, 64)),
        ("moebius c=1".into(), construct_moebius(1.0, 1.0).unwrap(), grid(-2.0, 0.5, 64)),
        ("negation".into(), construct_negation(1.0).unwrap(), grid(-2.0, 2.0, 64)),
        ("polynomial (1, -2, 0.5)".into(), construct_polynomial(&[1.0, -2.0, 0.5], 1.0).unwrap(), grid(0.1, 4.0, 64)),
        ("universal sin".into(), universal_sin, grid(-3.0, 3.0, 64)),
        ("universal x^3 - x".into(), universal_cubic, grid(-2.0, 2.0, 64)),
    ]
}

fn c1_constructions() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for (name, con, g) in constructions() {
        let start = Instant::now();
        let r = verify_embedding(&con.arch, &con.target, &g, 1e-6).map_err(|e| format!("{name}: {e}"))?;
        let took = start.elapsed();
        ensure!(r.pass, "{name}: max_err {} at {:?}, {} failures", r.max_err, r.argmax, r.failures.len());
        ensure!(took < Duration::from_secs(5), "{name}: took {took:?}");
        worst = worst.max(r.max_err);
        slowest = slowest.max(took);
    }
    Ok(format!("worst max_err {worst:.2e}, slowest {slowest:?}"))
}

fn c2_jabotinsky() -> Outcome {
    let start = Instant::now();
    let pos = Domain(vec![Interval::positive()]);
    let fields: Vec<(&str, FuncSpec, [f64; 2], [f64; 2])> = vec![
        ("h", spec(&["x0"], pos.clone()), [0.2, 3.0], [0.1, 1.5]),
        ("h^2", spec(&["x0^2"], Domain(vec![Interval::open(0.0, 1.0)])), [0.05, 0.5], [0.05, 0.9]),
        ("1", spec(&["1"], Domain::unbounded(1)), [-3.0, 3.0], [0.1, 4.0]),
        ("1 + h^2", spec(&["1 + x0^2"], Domain::unbounded(1)), [-1.0, 1.0], [0.05, 0.6]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut count) = (0.0f64, 0);
    for (name, f, xr, tr) in &fields {
        let rf = RFunction::new(f).map_err(|e| format!("{name}: {e}"))?;
        let field = VectorField::new(f.clone()).unwrap();
        for _ in 0..8 {
            let x = rng.random_range(xr[0]..xr[1]);
            let mut t = rng.random_range(tr[0]..tr[1]);
            if *name == "h^2" {
                // keep x/(1 - x t) inside (0, 1)
                t = t.min(0.9 * (1.0 / x - 1.0));
            }
            let j = jabotinsky_flow(&rf, x, t).map_err(|e| format!("{name} x={x} t={t}: {e}"))?;
            let i = time_t_map(&field, &[x], t, &cfg()).map_err(|e| format!("{name}: {e}"))?[0];
            let d = (j - i).abs();
            ensure!(d <= 1e-6, "f = {name}, x = {x}, t = {t}: jabotinsky {j} vs integrated {i}");
            worst = worst.max(d);
            count += 1;
        }
    }
    let took = start.elapsed();
    ensure!(count == 32, "only {count} triples");
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    Ok(format!("{count} triples, worst difference {worst:.2e}, {took:?}"))
}

/// Full (untruncated) product of coefficient vectors.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `Φ'·f − f∘Φ` computed with exact polynomial arithmetic.
fn julia_poly_residual(phi: &[f64], f: &[f64]) -> Vec<f64> {
    let dphi: Vec<f64> = phi.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
    let lhs = poly_mul(&dphi, f);
    let mut comp = vec![0.0];
    let mut power = vec![1.0];
    for c in f {
        for (k, v) in power.iter().enumerate() {
            if k >= comp.len() {
                comp.resize(k + 1, 0.0);
            }
            comp[k] += c * v;
        }
        power = poly_mul(&power, phi);
    }
    let n = lhs.len().max(comp.len());
    (0..n).map(|k| lhs.get(k).copied().unwrap_or(0.0) - comp.get(k).copied().unwrap_or(0.0)).collect()
}

fn c3_iterative_log() -> Outcome {
    let phi = PowerSeries::new(vec![0.0, 1.0, 1.0], 4).unwrap();
    let f = iterative_logarithm(&phi, 4).map_err(|e| e.to_string())?.series;
    for (k, want) in [(2, 1.0), (3, -1.0), (4, 1.5)] {
        ensure!((f.coeff(k) - want).abs() <= 1e-12, "x+x^2: c_{k} = {} (want {want})", f.coeff(k));
    }
    let res = julia_poly_residual(&[0.0, 1.0, 1.0], f.coeffs());
    let lead = res.iter().take(6).fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(lead <= 1e-12, "x+x^2: residual through order 5 is {lead}");

    let phi = PowerSeries::new(vec![0.0, 1.0, 1.0, 1.0, 1.0], 4).unwrap();
    let f = iterative_logarithm(&phi, 4).map_err(|e| e.to_string())?.series;
    ensure!((f.coeff(2) - 1.0).abs() <= 1e-12, "x/(1-x): c_2 = {}", f.coeff(2));
    ensure!(f.coeff(3).abs() <= 1e-12 && f.coeff(4).abs() <= 1e-12, "x/(1-x): c_3 = {}, c_4 = {}", f.coeff(3), f.coeff(4));
    let res = julia_poly_residual(&[0.0, 1.0, 1.0, 1.0, 1.0], f.coeffs());
    let lead = res.iter().take(6).fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(lead <= 1e-12, "x/(1-x): residual through order 5 is {lead}");
    Ok("x+x^2 -> (1, -1, 1.5); truncated x/(1-x) -> x^2; residuals vanish through order 5".into())
}

fn c4_monomial_certificate() -> Outcome {
    let mut cases = 0;
    for c in [1.0, 2.0, 3.0] {
        for alpha in 2..=5u32 {
            let cert = monomial_series_solution(c, alpha, 12).map_err(|e| e.to_string())?;
            ensure!(cert.series.is_zero(), "c={c}, alpha={alpha}: nonzero coefficient {:?}", cert.series.coeffs());
            ensure!(cert.series.order() == 12, "c={c}, alpha={alpha}: order {}", cert.series.order());
            let mut idx: Vec<usize> = cert.trace.iter().map(|s| s.index).collect();
            idx.sort_unstable();
            ensure!(idx == (0..=12).collect::<Vec<_>>(), "c={c}, alpha={alpha}: trace covers {idx:?}");
            ensure!(cert.trace.iter().all(|s| s.value == 0.0), "c={c}, alpha={alpha}: nonzero step");
            cases += 1;
        }
    }
    Ok(format!("{cases} cases, all-zero series with 13-step traces"))
}

fn c5_julia_contract() -> Outcome {
    let planar = |lo: f64, hi: f64| Grid::new(Domain(vec![Interval::closed(lo, hi); 2]), vec![12, 12], 1e-3).unwrap();
    let cases: Vec<(&str, Construction, Grid)> = vec![
        ("linear", construct_linear(2.0, 1.0).unwrap(), grid(-2.0, 2.0, 64)),
        ("monomial", construct_monomial(2.0, 3.0, 1.0).unwrap(), grid(0.1, 2.0, 64)),
        ("monomial c=1", construct_monomial(1.0, 2.0, 1.0).unwrap(), grid(0.5, 2.0, 64)),
        ("moebius", construct_moebius(1.0, 1.0).unwrap(), grid(-0.5, 0.5, 64)),
        ("negation", construct_negation(1.0).unwrap(), planar(-2.0, 2.0)),
        ("polynomial", construct_polynomial(&[1.0, -2.0], 1.0).unwrap(), planar(0.2, 2.0)),
        ("universal", construct_universal(&spec(&["x0^3 - x0"], closed(-2.0, 2.0)), 1.0).unwrap(), planar(-2.0, 2.0)),
    ];
    let mut worst = 0.0f64;
    for (name, con, g) in cases {
        let phi = con.flow_map().map_err(|e| format!("{name}: {e}"))?;
        let r = julia_residual(con.field_spec(), &phi, &g).map_err(|e| format!("{name}: {e}"))?;
        ensure!(r.escapes.is_empty(), "{name}: {} escapes", r.escapes.len());
        ensure!(r.max <= 1e-10, "{name}: residual {} at {:?}", r.max, r.argmax);
        worst = worst.max(r.max);
    }
    let zero = spec(&["0"], closed(-2.0, 2.0));
    let phi = spec(&["x0^3 - x0"], closed(-2.0, 2.0));
    let r = julia_residual(&zero, &phi, &grid(-1.0, 1.0, 64)).map_err(|e| e.to_string())?;
    ensure!(r.max == 0.0, "trivial solution residual {}", r.max);
    Ok(format!("worst construction residual {worst:.2e}; f = 0 gives exactly 0"))
}

fn c6_flow_laws() -> Outcome {
    let pos = Domain(vec![Interval::positive()]);
    let fields = [
        ("h", VectorField::new(spec(&["x0"], Domain::unbounded(1))).unwrap(), vec![0.7]),
        ("h^2", VectorField::new(spec(&["x0^2"], Domain::unbounded(1))).unwrap(), vec![0.3]),
        ("sin h", VectorField::new(spec(&["sin(x0)"], Domain::unbounded(1))).unwrap(), vec![1.0]),
        ("h ln h", VectorField::new(spec(&["x0*ln(x0)"], pos)).unwrap(), vec![1.5]),
        ("rotation", construct_negation(1.0).unwrap().arch.field().clone(), vec![1.0, 0.5]),
    ];
    let mut worst_t = 0.0f64;
    for (name, f, x) in &fields {
        for (s, t) in [(0.3, 0.4), (0.5, 0.25), (0.1, 0.8)] {
            let d = check_translation(f, x, s, t, &cfg()).map_err(|e| format!("{name}: {e}"))?;
            ensure!(d <= 1e-7, "{name}: translation residual {d} at s={s}, t={t}");
            worst_t = worst_t.max(d);
        }
    }

    let mut grids = 0;
    for (name, con, g) in constructions() {
        if !matches!(con.arch.variant(), Variant::Basic) || con.arch.n_in() != 1 {
            continue;
        }
        let r = check_monotone_1d(con.arch.field(), &g, con.horizon(), &cfg()).map_err(|e| format!("{name}: {e}"))?;
        ensure!(r.verdict == MonotoneVerdict::Monotone, "{name}: {:?}", r.verdict);
        grids += 1;
    }
    for (name, f, _) in fields.iter().take(4) {
        let g = if *name == "h ln h" { grid(0.5, 2.0, 64) } else { grid(-0.5, 0.5, 64) };
        let r = check_monotone_1d(f, &g, 1.0, &cfg()).map_err(|e| format!("{name}: {e}"))?;
        ensure!(r.verdict == MonotoneVerdict::Monotone, "{name}: {:?}", r.verdict);
        grids += 1;
    }

    let deltas = [1e-3, 1e-4, 1e-5];
    for (name, f, x) in &fields {
        let d = continuous_dependence(f, x, 1.0, &deltas, &cfg()).map_err(|e| format!("{name}: {e}"))?;
        ensure!(d[0] > d[1] && d[1] > d[2], "{name}: deltas {d:?} not decreasing");
    }
    Ok(format!("translation residual <= {worst_t:.2e}; {grids} monotone grids; dependence decreasing"))
}

#[derive(Deserialize)]
struct Golden {
    phi: FuncSpec,
    expected: Expected,
}

#[derive(Deserialize)]
struct Expected {
    verdicts: Verdicts,
    status: Vec<MorseStatus>,
    recommendation: bool,
}

fn golden_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn c7_morse_diagnosis() -> Outcome {
    let mut names = Vec::new();
    let mut closed_loops = 0;
    let mut entries: Vec<_> = std::fs::read_dir(golden_dir()).map_err(|e| e.to_string())?.flatten().collect();
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        let g: Golden = serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let name = g.phi.name.clone();
        let grid = Grid::uniform(g.phi.domain().clone(), 64).unwrap();
        let r = diagnose(&g.phi, &grid).map_err(|e| format!("{name}: {e}"))?;
        ensure!(r.verdicts == g.expected.verdicts, "{name}: verdicts {:?}", r.verdicts);
        let status: Vec<MorseStatus> = r.components.iter().map(|c| c.status).collect();
        ensure!(status == g.expected.status, "{name}: status {status:?}");
        ensure!(r.recommendation.is_some() == g.expected.recommendation, "{name}: recommendation {:?}", r.recommendation);
        if name == "square" || name == "cubic_minus_x" {
            let v = r.verdicts;
            ensure!(
                [v.node1, v.node2, v.node3].iter().all(|x| *x == nodembed::morse::Verdict::NonEmbeddable),
                "{name}: expected three obstructions"
            );
            let con = construct_universal(&g.phi, 1.0).map_err(|e| e.to_string())?;
            let rep = verify_embedding(&con.arch, &g.phi, &grid, 1e-6).map_err(|e| e.to_string())?;
            ensure!(rep.pass, "{name}: universal construction max_err {}", rep.max_err);
            closed_loops += 1;
        }
        names.push(name);
    }
    ensure!(names.len() == 6, "expected 6 golden files, found {names:?}");
    ensure!(closed_loops == 2, "universal loop closed for {closed_loops} maps");
    Ok(format!("{} golden verdicts match; universal construction embeds x^2 and x^3 - x", names.len()))
}

fn c8_normal_forms() -> Outcome {
    let parabola = spec(&["4*x0^2 - 8*x0 + 1"], closed(-1.0, 3.0));
    let quartic = spec(&["x0^4"], closed(-1.0, 1.0));
    let cubic = spec(&["x0^3"], closed(-1.0, 1.0));
    let mut worst = 0.0f64;
    for (name, psi, p, k) in [("4x^2-8x+1", &parabola, 1.0, 2), ("x^4", &quartic, 0.0, 4), ("x^3", &cubic, 0.0, 3)] {
        let nf = morse_normal_form_1d(psi, p, k).map_err(|e| format!("{name}: {e}"))?;
        ensure!(nf.residual <= 1e-8, "{name}: residual {}", nf.residual);
        worst = worst.max(nf.residual);
    }
    // μ(u) = u/2 + 1 for the parabola
    let nf = morse_normal_form_1d(&parabola, 1.0, 2).unwrap();
    for u in [-0.3, 0.1, 0.4] {
        let m = nf.mu(u).map_err(|e| e.to_string())?;
        ensure!((m - (u / 2.0 + 1.0)).abs() <= 1e-10, "parabola: mu({u}) = {m}");
    }
    // the x^4 chart is v -> sign(v) sqrt|v| with Ψ(chart(v)) = v²
    let ch = topological_chart_1d(&quartic, 0.0, 4).map_err(|e| e.to_string())?;
    ensure!(ch.residual <= 1e-8 && ch.index == 0, "x^4 chart residual {} index {}", ch.residual, ch.index);
    for v in [-0.5, -0.1, 0.2, 0.7] {
        let v = v * ch.v_radius;
        let x = ch.chart(v).map_err(|e| e.to_string())?;
        let want = v.signum() * v.abs().sqrt();
        ensure!((x - want).abs() <= 1e-8, "x^4 chart({v}) = {x}, want {want}");
    }
    Ok(format!("normal-form residuals <= {worst:.2e}; x^4 chart is sign(v) sqrt|v|"))
}

fn c9_perturbation() -> Outcome {
    let psi = spec(&["x0^3"], closed(-1.0, 1.0));
    let g = grid(-1.0, 1.0, 32);
    let (mut two, mut none) = (0, 0);
    for seed in 0..100u64 {
        let m = morseify(&psi, 0.5, seed, &g).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(m.critical_points.iter().all(|c| !c.degenerate), "seed {seed}: degenerate point");
        // x^3 + a x = x^3 - b x with b = -a
        let b = -m.a[0];
        if b > 0.0 {
            ensure!(m.critical_points.len() == 2, "seed {seed}: b = {b}, {} points", m.critical_points.len());
            for c in &m.critical_points {
                let d = (c.location[0].abs() - (b / 3.0).sqrt()).abs();
                ensure!(d <= 1e-8, "seed {seed}: point {:?} vs sqrt(b/3) = {}", c.location, (b / 3.0).sqrt());
            }
            two += 1;
        } else {
            ensure!(m.critical_points.is_empty(), "seed {seed}: b = {b} but critical points found");
            none += 1;
        }
    }
    Ok(format!("100 seeds Morse: {two} with +-sqrt(b/3), {none} without critical points"))
}

fn c10_suspension() -> Outcome {
    let doubling = MappingTorus::new(
        FuncSpec::parse("phi", 1, &["2*x0"]).unwrap(),
        Some(FuncSpec::parse("inv", 1, &["x0/2"]).unwrap()),
        0.1,
    )
    .map_err(|e| e.to_string())?;
    let shift = MappingTorus::new(
        FuncSpec::parse("phi", 1, &["x0 + 1"]).unwrap(),
        Some(FuncSpec::parse("inv", 1, &["x0 - 1"]).unwrap()),
        0.1,
    )
    .map_err(|e| e.to_string())?;
    let closed_forms: [(&str, &MappingTorus, fn(f64, i64) -> f64); 2] =
        [("2x", &doubling, |x, k| x * 2f64.powi(k as i32)), ("x+1", &shift, |x, k| x + k as f64)];
    for (name, torus, exact) in closed_forms {
        for x in [-1.5, 0.3, 2.0] {
            for k in 0..=20i64 {
                let p = torus.canonicalize(&[x], k as f64 * torus.horizon()).map_err(|e| e.to_string())?;
                let want = exact(x, k);
                ensure!(p.k == k && p.r == 0.0, "{name}: time {k}T gave winding {} r {}", p.k, p.r);
                ensure!((p.x[0] - want).abs() <= 1e-12 * want.abs().max(1.0), "{name}: Phi^{k}({x}) = {} vs {want}", p.x[0]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..1000 {
        let torus = if i % 2 == 0 { &doubling } else { &shift };
        let n: i64 = rng.random_range(-6..=6);
        let x: f64 = rng.random_range(-5.0..5.0);
        let t: f64 = rng.random_range(-2.0..2.0);
        let (y, s) = torus.automorphism(n, &[x], t).map_err(|e| e.to_string())?;
        let a = torus.canonicalize(&[x], t).map_err(|e| e.to_string())?;
        let b = torus.canonicalize(&y, s).map_err(|e| e.to_string())?;
        ensure!(a.k == b.k + n, "n={n}, x={x}, t={t}: windings {} vs {} + {n}", a.k, b.k);
        ensure!((a.r - b.r).abs() <= 1e-12, "n={n}, x={x}, t={t}: fiber times {} vs {}", a.r, b.r);
        ensure!((a.x[0] - b.x[0]).abs() <= 1e-12 * a.x[0].abs().max(1.0), "n={n}, x={x}, t={t}: {:?} vs {:?}", a.x, b.x);
    }
    Ok("time kT = Phi^k for k <= 20; 1000 quotient checks exact in winding".into())
}

fn c11_antipodal() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for comps in ["x0", "x0 + x1^2", "x0^3 + x1"] {
        let g = FuncSpec::parse("g", 2, &[comps]).unwrap();
        let a = antipodal_point(&g, 1e-10).map_err(|e| format!("{comps}: {e}"))?;
        let [c, s] = a.u;
        let gap = (g.eval_scalar(&[c, s]).unwrap() - g.eval_scalar(&[-c, -s]).unwrap()).abs();
        ensure!(gap <= 1e-10, "{comps}: |g(u) - g(-u)| = {gap}");
        worst = worst.max(gap);
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("worst gap {worst:.2e} in {took:?}"))
}

fn c12_negative_controls() -> Outcome {
    let f = VectorField::new(spec(&["x0^2"], Domain::unbounded(1))).unwrap();
    let traj = integrate(&f, &[1.0], 2.0, &cfg()).map_err(|e| e.to_string())?;
    let t_star = match traj.status {
        Status::BlewUp { t_star } => t_star,
        other => return Err(format!("h' = h^2 ended with {other:?}")),
    };
    ensure!((t_star - 1.0).abs() <= 1e-3, "t* = {t_star}");

    let zero = NodeArchitecture::new(Variant::Basic, VectorField::new(spec(&["0"], Domain::unbounded(1))).unwrap(), 1.0)
        .map_err(|e| e.to_string())?;
    let target = spec(&["neg(x0)"], closed(-1.0, 1.0));
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let arch_path = dir.path().join("zero.json");
    let target_path = dir.path().join("neg.json");
    std::fs::write(&arch_path, serde_json::to_string(&zero).unwrap()).unwrap();
    std::fs::write(&target_path, serde_json::to_string(&target).unwrap()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_nodembed"))
        .args(["--grid", "-1:1:64", "--out"])
        .arg(dir.path())
        .args(["verify", "--arch"])
        .arg(&arch_path)
        .arg("--target")
        .arg(&target_path)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure!(status.code() == Some(2), "verify exited with {status:?}");
    Ok(format!("blow-up at t* = {t_star:.6}; verify of f = 0 against -x exits 2"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("constructions verify on 64-point grids", c1_constructions),
        ("closed-form flows match integration", c2_jabotinsky),
        ("iterative logarithm", c3_iterative_log),
        ("monomial nonexistence certificates", c4_monomial_certificate),
        ("Julia residual of constructed pairs", c5_julia_contract),
        ("flow laws", c6_flow_laws),
        ("Morse diagnosis golden verdicts", c7_morse_diagnosis),
        ("normal forms and charts", c8_normal_forms),
        ("perturbation of x^3", c9_perturbation),
        ("suspension flow", c10_suspension),
        ("antipodal finder", c11_antipodal),
        ("negative controls", c12_negative_controls),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
