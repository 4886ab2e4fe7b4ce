use std::f64::consts::E;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grunbaum_lab::quadrature::{integrate_pieces, Tolerance};
use grunbaum_lab::sconcave::*;
use grunbaum_lab::Error;

#[test]
fn borell_examples() {
    assert_eq!(s_from_p(1.0, 1).unwrap(), 0.5);
    assert_eq!(s_from_p(0.0, 1).unwrap(), 0.0);
    assert!((s_from_p(-0.75, 1).unwrap() + 3.0).abs() < 1e-14);
    assert_eq!(p_from_s(1.0 / 3.0, 3).unwrap(), f64::INFINITY);
    assert!(matches!(p_from_s(0.6, 2), Err(Error::Domain(_))));
}

#[test]
fn bound_examples() {
    assert!((s_grunbaum_bound(1.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((s_grunbaum_bound(0.5).unwrap() - classic_grunbaum_bound(2).unwrap()).abs() < 1e-15);
    assert!((s_grunbaum_bound(0.0).unwrap() - 1.0 / E).abs() < 1e-15);
    assert!((s_grunbaum_bound(-0.5).unwrap() - 0.25).abs() < 1e-15);
    assert!(matches!(s_grunbaum_bound(-1.0), Err(Error::Domain(_))));
    for n in 1..=6 {
        let nf = n as f64;
        let classic = classic_grunbaum_bound(n).unwrap();
        assert!((classic - (nf / (nf + 1.0)).powi(n as i32)).abs() < 1e-15);
        assert!((classic - s_grunbaum_bound(1.0 / nf).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn c_np_examples() {
    assert!((c_np_bound(1, 1.0).unwrap() - 4.0 / 9.0).abs() < 1e-15);
    assert!((c_np_bound(1, 0.0).unwrap() - 1.0 / E).abs() < 1e-15);
    // the p → ∞ limit for n = 2 is the planar constant 4/9
    assert!((c_np_bound(2, 1e12).unwrap() - classic_grunbaum_bound(2).unwrap()).abs() < 1e-10);
}

#[test]
fn c_np_matches_s_bound_on_grid() {
    for n in 1..=3usize {
        let lo = -1.0 / (n as f64 + 1.0);
        for k in 1..=200 {
            let p = lo + (k as f64 / 200.0).powi(3) * (50.0 - lo);
            let s = s_from_p(p, n).unwrap();
            let d = (c_np_bound(n, p).unwrap() - s_grunbaum_bound(s).unwrap()).abs();
            assert!(d <= 1e-12, "n={n} p={p}: {d}");
        }
    }
}

#[test]
fn bound_is_monotone_in_s() {
    let mut prev = 0.0;
    for k in 1..=1000 {
        let s = -1.0 + 2.0 * k as f64 / 1000.0;
        let b = s_grunbaum_bound(s).unwrap();
        assert!(b > prev, "s = {s}");
        prev = b;
    }
    assert_eq!(s_grunbaum_bound(1.0).unwrap(), 0.5);
    assert!(s_grunbaum_bound(-1.0 + 1e-6).unwrap() < 1e-5);
}

fn parameter_grid() -> Vec<(f64, ExtremalParams)> {
    let mut out = Vec::new();
    for s in [0.8, 0.5, 0.2, 0.0, -0.25, -0.5, -0.8] {
        for (a, r1) in [(1.0, 0.0), (3.0, 2.0), (0.5, -1.0)] {
            out.push((s, ExtremalParams::for_s(s, a, r1, None).unwrap()));
        }
    }
    out
}

#[test]
fn extremal_examples() {
    let lin = extremal_density_1d(0.5, &ExtremalParams::for_s(0.5, 1.0, 1.0, None).unwrap()).unwrap();
    for r in [0.1, 0.5, 0.9] {
        assert!((lin.eval(r) - 2.0 * r).abs() < 1e-12);
    }
    let exp = extremal_density_1d(0.0, &ExtremalParams::for_s(0.0, 1.0, 0.0, None).unwrap()).unwrap();
    assert!((exp.eval(-1.0) - (-1.0f64).exp()).abs() < 1e-12);
    let neg = extremal_density_1d(-0.5, &ExtremalParams::for_s(-0.5, 1.0, 0.0, None).unwrap()).unwrap();
    assert!((neg.eval(-1.0) - 2.0 / 8.0).abs() < 1e-12);
    assert!(ExtremalParams::for_s(-0.5, 1.0, 0.0, Some(-1.0)).is_err());
    assert!(extremal_density_1d(0.5, &ExtremalParams::for_s(0.0, 1.0, 0.0, None).unwrap()).is_err());
}

#[test]
fn extremal_densities_are_sharp() {
    for (s, params) in parameter_grid() {
        let mu = extremal_density_1d(s, &params).unwrap();
        let r = verify_s_cut(&mu, s).unwrap();
        assert!(r.gap.abs() <= 1e-7 && r.equality, "s={s} {params:?}: {r:?}");
    }
}

#[test]
fn extremal_densities_are_p_concave() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (s, params) in parameter_grid() {
        let mu = extremal_density_1d(s, &params).unwrap();
        let p = p_from_s(s, 1).unwrap();
        let (lo, hi) = mu.support();
        let lo = if lo.is_finite() { lo } else { hi - 30.0 / params.a };
        for _ in 0..10_000 {
            let (x, y) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
            let mid = mu.eval(0.5 * (x + y));
            let mean = p_mean_half(mu.eval(x), mu.eval(y), p);
            assert!(mid >= mean - 1e-9, "s={s}: ψ({}) = {mid} < {mean}", 0.5 * (x + y));
        }
    }
}

#[test]
fn counterexample_examples() {
    let m = counterexample_measure(-0.5, 10).unwrap();
    assert!((m.closed.left_mass - (1.0 / 10f64.ln() - 1.0 / 9.0)).abs() < 1e-15);
    assert!((m.closed.left_mass - 0.323183).abs() < 1e-6);
    assert!((m.closed.barycenter - 0.74415).abs() < 1e-5);
    assert!(m.closed_form_delta() < 1e-8);
    assert!(matches!(counterexample_measure(-1.0, 10), Err(Error::Domain(_))));
    assert!(counterexample_measure(-0.5, 1).is_err());
}

/// Left mass of `(1-t)^{1/p}` on `[0, 1-1/k]` by direct quadrature, independent of the library density.
fn left_mass_oracle(p: f64, k: u64) -> f64 {
    let end = 1.0 - 1.0 / k as f64;
    let mut pts = vec![0.0];
    let mut d = 1.0;
    while d > 2.0 / k as f64 {
        d *= 0.5;
        pts.push(1.0 - d);
    }
    pts.push(end);
    let tol = Tolerance::new(1e-13, 0.0);
    let psi = |t: f64| (1.0 - t).powf(1.0 / p);
    let mass = integrate_pieces(psi, &pts, tol).unwrap();
    let g = integrate_pieces(|t| t * psi(t), &pts, tol).unwrap() / mass;
    let below: Vec<f64> = pts.iter().copied().filter(|&x| x < g).chain([g]).collect();
    integrate_pieces(psi, &below, tol).unwrap() / mass
}

#[test]
fn three_quarter_family_decreases() {
    let ks = [10, 100, 1000, 10_000];
    let rep = verify_no_bound(-0.75, &ks, None).unwrap();
    assert!(rep.decreasing);
    for row in &rep.rows {
        let oracle = left_mass_oracle(-0.75, row.k);
        assert!((row.left_mass - oracle).abs() < 1e-9, "k={}: {} vs {oracle}", row.k, row.left_mass);
    }
    // slow decay: about 0.119 at k = 10^4, so a 0.05 threshold is only met much later
    let last = rep.rows.last().unwrap().left_mass;
    assert!((last - 0.1194).abs() < 1e-3, "{last}");
}

#[test]
fn no_bound_sweeps() {
    let ks: Vec<u64> = (1..=6).map(|e| 10u64.pow(e)).collect();
    let half = verify_no_bound(-0.5, &ks, Some(0.08)).unwrap();
    assert!(half.decreasing && half.below_threshold == Some(true));
    let six = verify_no_bound(-0.6, &ks[..4], None).unwrap();
    assert!(six.decreasing);
    // reported only
    let near = verify_no_bound(-0.51, &[2, 4, 8, 16], None).unwrap();
    assert_eq!(near.rows.len(), 4);
}

#[test]
fn counterexample_tends_to_zero() {
    let ks: Vec<u64> = (1..=15).map(|e| 1u64 << (3 * e)).collect();
    for p in [-0.5, -0.6, -0.9] {
        let rep = verify_no_bound(p, &ks, None).unwrap();
        assert!(rep.decreasing, "p = {p}");
        let first = rep.rows[0].left_mass;
        let last = rep.rows.last().unwrap().left_mass;
        assert!(last < 0.5 * first, "p = {p}: {first} -> {last}");
    }
}

proptest! {
    #[test]
    fn borell_round_trip(s in -20.0f64..0.5, n in 1usize..5) {
        let s = s.min(1.0 / n as f64 - 1e-9);
        let p = p_from_s(s, n).unwrap();
        prop_assert!((s_from_p(p, n).unwrap() - s).abs() <= 1e-12 * s.abs().max(1.0));
    }

    #[test]
    fn c_np_consistency(n in 1usize..4, p in -0.2f64..100.0) {
        prop_assume!(p > -1.0 / (n as f64 + 1.0));
        let s = s_from_p(p, n).unwrap();
        prop_assert!((c_np_bound(n, p).unwrap() - s_grunbaum_bound(s).unwrap()).abs() <= 1e-12);
    }
}
