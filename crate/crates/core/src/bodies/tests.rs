use super::*;
use crate::gaussian::{norm_cdf, norm_pdf};
use std::f64::consts::E;

fn triangle() -> WeightedBody {
    let b = ConvexBody::polytope(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    WeightedBody::new(b, BodyDensity::Uniform).unwrap()
}

fn square(density: BodyDensity) -> WeightedBody {
    let b = ConvexBody::polytope(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    WeightedBody::new(b, density).unwrap()
}

fn gauss() -> BodyDensity {
    BodyDensity::Gaussian { mean: None, sigma: 1.0 }
}

fn halfplane() -> WeightedBody {
    let b = ConvexBody::new(
        vec![vec![0.0, 0.0]],
        vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
    )
    .unwrap();
    WeightedBody::new(b, gauss()).unwrap()
}

fn simplex3() -> WeightedBody {
    let b = ConvexBody::polytope(vec![
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    WeightedBody::new(b, BodyDensity::Uniform).unwrap()
}

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

#[test]
fn total_mass_examples() {
    assert!((total_mass(&square(BodyDensity::Uniform), &cfg()).unwrap().value - 1.0).abs() < 1e-15);
    assert!((total_mass(&triangle(), &cfg()).unwrap().value - 0.5).abs() < 1e-15);
    let want = (norm_cdf(1.0) - 0.5).powi(2);
    let got = total_mass(&square(gauss()), &cfg()).unwrap().value;
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn unbounded_uniform_is_rejected() {
    let b = ConvexBody::new(vec![vec![0.0, 0.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(WeightedBody::new(b, BodyDensity::Uniform), Err(Error::Domain(_))));
    let flat = ConvexBody::polytope(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
    assert!(matches!(flat, Err(Error::Precondition(_))));
}

#[test]
fn barycenter_examples() {
    let g = weighted_barycenter(&triangle(), &cfg()).unwrap().point;
    assert!((g[0] - 1.0 / 3.0).abs() < 1e-15 && (g[1] - 1.0 / 3.0).abs() < 1e-15);
    let g = weighted_barycenter(&halfplane(), &cfg()).unwrap().point;
    assert!((g[0] + 2.0 * norm_pdf(0.0)).abs() < 1e-9 && g[1].abs() < 1e-12, "{g:?}");
    let hex: Vec<Pt> = (0..6)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / 3.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let w = WeightedBody::new(ConvexBody::polytope(hex).unwrap(), gauss()).unwrap();
    let g = weighted_barycenter(&w, &cfg()).unwrap().point;
    assert!(g.iter().all(|x| x.abs() < 1e-12), "{g:?}");
}

#[test]
fn marginal_examples() {
    let m = marginal_density(&square(BodyDensity::Uniform), &[1.0, 0.0], &cfg()).unwrap();
    for t in [0.1, 0.5, 0.9] {
        assert!((m.eval(t) - 1.0).abs() < 1e-12);
    }
    let m = marginal_density(&triangle(), &[1.0, 0.0], &cfg()).unwrap();
    for t in [0.1, 0.5, 0.9] {
        assert!((m.eval(t) - (1.0 - t)).abs() < 1e-12);
    }
    let plane = ConvexBody::new(
        vec![vec![0.0, 0.0]],
        vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
    )
    .unwrap();
    let w = WeightedBody::new(plane, gauss()).unwrap();
    let m = marginal_density(&w, &[0.6, -0.8], &cfg()).unwrap();
    for t in [-2.0, 0.0, 0.7] {
        assert!((m.eval(t) - norm_pdf(t)).abs() < 1e-12);
    }
    assert!(marginal_density(&w, &[0.0, 0.0], &cfg()).is_err());
}

#[test]
fn cut_mass_examples() {
    let lower = cut_mass(&triangle(), &[1.0, 0.0], 1.0 / 3.0, &cfg()).unwrap().value;
    assert!((lower / 0.5 - 5.0 / 9.0).abs() < 1e-14);
    let sq = cut_mass(&square(BodyDensity::Uniform), &[1.0, 0.0], 0.5, &cfg()).unwrap().value;
    assert!((sq - 0.5).abs() < 1e-15);
    let c = -2.0 * norm_pdf(0.0);
    let h = cut_mass(&halfplane(), &[1.0, 0.0], c, &cfg()).unwrap().value;
    assert!((h - norm_cdf(c)).abs() < 1e-12);
}

fn random_polygon(rng: &mut ChaCha8Rng, k: usize) -> ConvexBody {
    let pts: Vec<Pt> = (0..k).map(|_| vec![rng.gen::<f64>() * 2.0 - 0.5, rng.gen::<f64>() * 2.0 - 1.0]).collect();
    ConvexBody::polytope(geometry::hull_2d(&pts, 1e-12)).unwrap()
}

#[test]
fn marginal_and_barycenter_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bodies = Vec::new();
    for _ in 0..3 {
        bodies.push(WeightedBody::new(random_polygon(&mut rng, 9), BodyDensity::Uniform).unwrap());
        bodies.push(WeightedBody::new(random_polygon(&mut rng, 9), gauss()).unwrap());
    }
    let pts: Vec<Pt> = (0..10).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
    bodies.push(WeightedBody::new(ConvexBody::polytope(pts).unwrap(), BodyDensity::Uniform).unwrap());
    for w in &bodies {
        let u = normalized(&(0..w.dim()).map(|_| rng.gen::<f64>() - 0.5).collect::<Pt>()).unwrap();
        let m = marginal_density(w, &u, &cfg()).unwrap();
        let total = total_mass(w, &cfg()).unwrap().value;
        assert!((m.total_mass() - total).abs() < 1e-9 * total);
        let g = weighted_barycenter(w, &cfg()).unwrap().point;
        let gu = dot(&g, &u);
        assert!((m.barycenter().unwrap() - gu).abs() < 1e-7);
        for c in [gu - 0.2, gu, gu + 0.1] {
            let direct = cut_mass(w, &u, c, &cfg()).unwrap().value;
            assert!((m.cdf(c).unwrap() - direct).abs() < 1e-8, "{} vs {direct}", m.cdf(c).unwrap());
        }
    }
}

#[test]
fn skew_examples() {
    let t = triangle();
    let u = [0.6, 0.8];
    let a = skew_slice_mass(&t, &u, &u, 0.5, &cfg()).unwrap().value;
    let b = cut_mass(&t, &u, 0.5, &cfg()).unwrap().value;
    assert!((a - b).abs() < 1e-10);

    let mut p = ExtremalBodyParams::new(0.0, 2);
    p.a = 1.7;
    p.r1 = 0.4;
    let upright = extremal_body_nd(&p).unwrap();
    let total = total_mass(&upright, &cfg()).unwrap().value;
    let e1 = [1.0, 0.0];
    for r in [-1.0, 0.0, 0.3] {
        let m = skew_slice_mass(&upright, &e1, &e1, r, &cfg()).unwrap().value;
        assert!((m - (1.7 * (r - 0.4f64)).exp() * total).abs() < 1e-9 * total, "r={r}");
    }
    p.skew = Some(vec![1.0, 1.0]);
    let sheared = extremal_body_nd(&p).unwrap();
    for r in [-0.5, 0.2] {
        let s = skew_slice_mass(&sheared, &e1, &[1.0, 1.0], r, &cfg()).unwrap().value;
        let c = cut_mass(&upright, &e1, r, &cfg()).unwrap().value;
        assert!((s - c).abs() < 1e-6, "{s} vs {c}");
    }
    assert!(skew_slice_mass(&halfplane(), &e1, &[1.0, 1.0], 0.0, &cfg()).is_err());
}

#[test]
fn verify_examples() {
    let r = grunbaum_verify(&triangle(), &[1.0, 0.0], MeasureClass::Lebesgue(0), &cfg()).unwrap();
    assert!((r.measured - 4.0 / 9.0).abs() < 1e-14 && (r.bound - 4.0 / 9.0).abs() < 1e-15);
    assert!(r.equality, "{r:?}");
    let r = grunbaum_verify(&halfplane(), &[1.0, 0.0], MeasureClass::Gaussian, &cfg()).unwrap();
    let want = norm_cdf(-2.0 * norm_pdf(0.0));
    assert!((r.measured - want).abs() < 1e-10 && (r.bound - want).abs() < 1e-12);
    assert!(r.equality, "{r:?}");
    let disk: Vec<Pt> = (0..96)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 96.0;
            vec![0.3 + a.cos(), a.sin()]
        })
        .collect();
    let w = WeightedBody::new(ConvexBody::polytope(disk).unwrap(), gauss()).unwrap();
    let r = grunbaum_verify(&w, &[1.0, 0.0], MeasureClass::Gaussian, &cfg()).unwrap();
    assert!(r.gap > 1e-3 && !r.equality, "{r:?}");
    let mc = grunbaum_verify(&w, &[1.0, 0.0], MeasureClass::Gaussian, &EvalConfig::monte_carlo(400_000, 3)).unwrap();
    assert!((mc.measured - r.measured).abs() < 4.0 * mc.oracle.tolerance + 1e-12, "{mc:?}");
    assert!(!mc.equality && mc.note.is_some());
}

#[test]
fn square_is_never_tight() {
    let r = grunbaum_verify(&square(BodyDensity::Uniform), &[0.8, 0.6], MeasureClass::Lebesgue(2), &cfg()).unwrap();
    assert!((r.measured - 0.5).abs() < 1e-14 && !r.equality);
}

#[test]
fn simplex_cut_exact() {
    let r = grunbaum_verify(&simplex3(), &[-1.0, 0.0, 0.0], MeasureClass::Lebesgue(3), &cfg()).unwrap();
    assert!((r.measured - 27.0 / 64.0).abs() < 1e-12, "{r:?}");
    assert!(r.equality, "{r:?}");
}

#[test]
fn optimizer_examples() {
    let tri = min_cut_direction(&triangle(), MeasureClass::Lebesgue(0), &cfg()).unwrap();
    assert!((tri.value - 4.0 / 9.0).abs() < 1e-8, "{}", tri.value);
    let sweep = (0..360)
        .map(|k| {
            let a = (k as f64).to_radians();
            let u = [a.cos(), a.sin()];
            let g = [1.0 / 3.0, 1.0 / 3.0];
            let m = cut_mass(&triangle(), &u, dot(&g, &u), &cfg()).unwrap().value / 0.5;
            m.min(1.0 - m)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(tri.value <= sweep + 1e-9);
    assert_eq!(tri.starts.len(), MIN_STARTS);
    let sq = min_cut_direction(&square(BodyDensity::Uniform), MeasureClass::Lebesgue(0), &cfg()).unwrap();
    assert!((sq.value - 0.5).abs() < 1e-12);
    let s3 = min_cut_direction(&simplex3(), MeasureClass::Lebesgue(0), &cfg()).unwrap();
    assert!((s3.value - 27.0 / 64.0).abs() < 1e-7, "{}", s3.value);
}

#[test]
fn extremal_planar_equality() {
    for s in [0.5, 0.2, 0.0, -0.4] {
        let mut p = ExtremalBodyParams::new(s, 2);
        p.a = 1.3;
        p.r1 = 0.5;
        let w = extremal_body_nd(&p).unwrap();
        let r = grunbaum_verify(&w, &[1.0, 0.0], MeasureClass::SConcave(s), &cfg()).unwrap();
        assert!(r.gap.abs() < 1e-7, "s={s}: {r:?}");
        assert!(r.equality, "s={s}: {r:?}");
        let mass = total_mass(&w, &cfg()).unwrap().value;
        assert!((mass - w.law.as_ref().unwrap().mass()).abs() < 1e-8 * mass, "s={s}");
    }
    let r = grunbaum_verify(&extremal_body_nd(&ExtremalBodyParams::new(0.0, 2)).unwrap(), &[0.0, 1.0], MeasureClass::SConcave(0.0), &cfg()).unwrap();
    assert!(r.gap > 0.1 && !r.equality);
}

#[test]
fn extremal_monte_carlo_small() {
    for (s, n) in [(0.25, 3), (0.0, 3), (-0.3, 4)] {
        let w = extremal_body_nd(&ExtremalBodyParams::new(s, n)).unwrap();
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        let r = grunbaum_verify(&w, &u, MeasureClass::SConcave(s), &EvalConfig::monte_carlo(640_000, 11)).unwrap();
        assert!(r.within_noise(4.0), "s={s}: {r:?}");
        let e = s_grunbaum_bound(s).unwrap();
        assert!((r.bound - e).abs() < 1e-15);
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let w = simplex3();
    let c = EvalConfig::monte_carlo(64_000, 99);
    let a = cut_mass(&w, &[1.0, 1.0, 0.0], 0.4, &c).unwrap();
    let b = cut_mass(&w, &[1.0, 1.0, 0.0], 0.4, &c).unwrap();
    assert_eq!(a, b);
    let exact = cut_mass(&w, &[1.0, 1.0, 0.0], 0.4, &cfg()).unwrap().value;
    assert!((a.value - exact).abs() < 4.0 * a.std_err);
}

#[test]
fn json_round_trip() {
    let w = WeightedBody::from_json(r#"{"vertices":[[0,0],[1,0],[0,1]],"density":{"kind":"uniform"}}"#).unwrap();
    assert!((total_mass(&w, &cfg()).unwrap().value - 0.5).abs() < 1e-15);
    let e = extremal_body_nd(&ExtremalBodyParams::new(-0.5, 3)).unwrap();
    let json = serde_json::to_string(&e.to_spec()).unwrap();
    let back = WeightedBody::from_json(&json).unwrap();
    assert!(back.law.is_some() && back.dim() == 3);
    let g = WeightedBody::from_json(r#"{"vertices":[[0,0]],"rays":[[-1,0],[0,1],[0,-1]],"density":{"kind":"gaussian"}}"#).unwrap();
    assert!((total_mass(&g, &cfg()).unwrap().value - 0.5).abs() < 1e-12);
    assert!(WeightedBody::from_json(r#"{"vertices":[[0,0],[1,0],[0,1]],"density":{"kind":"cubic"}}"#).is_err());
}

#[test]
fn truncation_of_pointwise_extremal() {
    let e = extremal_body_nd(&ExtremalBodyParams::new(0.0, 3)).unwrap();
    let spec = e.to_spec();
    let w = WeightedBody::new(ConvexBody::new(spec.vertices, spec.rays).unwrap(), spec.density).unwrap();
    let m = total_mass(&w, &EvalConfig::monte_carlo(256_000, 5)).unwrap();
    assert!((m.value - 4.0).abs() < 4.0 * m.std_err, "{m:?}");
    let direct = cut_mass(&w, &[1.0, 0.0, 0.0], -1.0, &cfg()).unwrap();
    assert!((direct.value / m.value - 1.0 / E).abs() < 4.0 * direct.std_err / m.value + 0.01);
}
