use std::f64::consts::E;

use proptest::prelude::*;

use grunbaum_lab::gaussian::*;
use grunbaum_lab::quadrature::{integrate_endpoint_singular, Tolerance};
use grunbaum_lab::Error;

/// Maclaurin series `Φ(x) = 1/2 + φ(x) Σ x^{2k+1} / (2k+1)!!`, exact enough for |x| < 3.
fn cdf_series(x: f64) -> f64 {
    let (mut term, mut sum, mut k) = (x, x, 0.0);
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        k += 1.0;
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
    }
    0.5 + norm_pdf(x) * sum
}

fn quantile_integral(t: f64) -> f64 {
    integrate_endpoint_singular(norm_quantile, 0.0, t, true, false, Tolerance::new(1e-12, 1e-14)).value
}

#[test]
fn cdf_examples() {
    assert_eq!(std_normal_cdf(0.0).unwrap().value(), 0.5);
    assert_eq!(std_normal_cdf(f64::INFINITY).unwrap().value(), 1.0);
    assert_eq!(std_normal_cdf(f64::NEG_INFINITY).unwrap().value(), 0.0);
    let x = 1.959963985;
    assert!((norm_cdf(x) - cdf_series(x)).abs() < 1e-15);
    assert!((norm_cdf(x) - 0.975).abs() < 1e-9);
    assert!(matches!(std_normal_cdf(f64::NAN), Err(Error::InvalidArgument(_))));
}

#[test]
fn cdf_matches_series_oracle() {
    for k in -60..=60 {
        let x = k as f64 * 0.05;
        assert!((norm_cdf(x) - cdf_series(x)).abs() <= CDF_ACCURACY, "x = {x}");
    }
}

#[test]
fn quantile_examples() {
    assert_eq!(norm_quantile(0.5), 0.0);
    // bisection on the series oracle
    let (mut lo, mut hi) = (1.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf_series(mid) < 0.975 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((norm_quantile(0.975) - lo).abs() < 1e-12);
    assert!((norm_quantile(0.975) - 1.959963985).abs() < 1e-9);
    for k in -80..=80 {
        let x = k as f64 / 10.0;
        // above the median Φ(x) carries an absolute rounding of half an ulp of 1
        let conditioning = if x > 0.0 { f64::EPSILON / norm_pdf(x) } else { 0.0 };
        assert!((norm_quantile(norm_cdf(x)) - x).abs() <= 1e-11 + conditioning, "x = {x}");
    }
}

#[test]
fn quantile_boundaries_are_flagged() {
    let lo = std_normal_quantile(0.0).unwrap();
    let hi = std_normal_quantile(1.0).unwrap();
    assert!(lo.boundary && lo.value == f64::NEG_INFINITY);
    assert!(hi.boundary && hi.value == f64::INFINITY);
    assert!(!std_normal_quantile(0.3).unwrap().boundary);
    assert!(matches!(std_normal_quantile(1.5), Err(Error::InvalidArgument(_))));
}

#[test]
fn isoperimetric_examples() {
    assert!((gaussian_isoperimetric(0.5).unwrap() - 0.398_942_280_4).abs() < 1e-10);
    assert_eq!(gaussian_isoperimetric(0.0).unwrap(), 0.0);
    assert_eq!(gaussian_isoperimetric(1.0).unwrap(), 0.0);
    for t in [0.1, 0.25, 0.4] {
        assert!((isoperimetric(t) - isoperimetric(1.0 - t)).abs() < 1e-14);
    }
}

#[test]
fn ehrhard_bound_examples() {
    assert!((ehrhard_grunbaum_bound(1.0).unwrap().value() - 0.5).abs() < 1e-15);
    let oracle = norm_cdf(quantile_integral(0.5) / 0.5);
    assert!((ehrhard_grunbaum_bound(0.5).unwrap().value() - oracle).abs() < 1e-12);
    for k in 1..=9 {
        let t = k as f64 / 10.0;
        assert!(ehrhard_grunbaum_bound(t).unwrap().value() >= t / E);
    }
    assert!(matches!(ehrhard_grunbaum_bound(0.0), Err(Error::Domain(_))));
}

#[test]
fn quantile_cut_bound_examples() {
    assert_eq!(quantile_cut_bound_abs(1.0).unwrap(), 0.0);
    assert!((quantile_cut_bound_abs(0.5).unwrap() - 0.797_884_560_8).abs() < 1e-10);
    for k in 1..=20 {
        let t = k as f64 / 20.0;
        let via = norm_cdf(-quantile_cut_bound_abs(t).unwrap());
        assert!((via - ehrhard_grunbaum_bound(t).unwrap().value()).abs() <= 1e-12);
    }
    assert!(quantile_cut_bound_abs(0.0).is_err());
}

#[test]
fn lambert_examples() {
    assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
    assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-14);
    assert!((lambert_w0(-1.0 / E).unwrap() + 1.0).abs() < 1e-7);
    assert!(matches!(lambert_w0(-0.4), Err(Error::Domain(_))));
}

#[test]
fn lambert_residual_on_log_grid() {
    let mut xs = Vec::new();
    for k in 0..=60 {
        // offsets from the branch point between 1e-9 and about 0.37
        xs.push(-1.0 / E + 1e-9 * 10f64.powf(k as f64 * 8.6 / 60.0));
    }
    for k in 0..=90 {
        xs.push(10f64.powf(-9.0 + k as f64 * 15.0 / 90.0));
    }
    for x in xs {
        let w = lambert_w0(x).unwrap();
        let r = (w * w.exp() - x).abs() / x.abs().max(1.0);
        assert!(r <= 1e-12, "x = {x}: residual {r}");
    }
}

#[test]
fn ehrhard_bound_strictly_increasing() {
    let mut prev = 0.0;
    for k in 1..=10_000 {
        let b = ehrhard_grunbaum_bound(k as f64 / 10_000.0).unwrap().value();
        assert!(b > prev, "k = {k}");
        prev = b;
    }
}

proptest! {
    #[test]
    fn quantile_identity(t in 0.001f64..0.999) {
        let lhs = ehrhard_grunbaum_bound(t).unwrap().value();
        let rhs = norm_cdf(quantile_integral(t) / t);
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn gaussian_bound_dominates_log_concave(t in 1e-6f64..1.0) {
        let b = ehrhard_grunbaum_bound(t).unwrap().value();
        prop_assert!(b - t / E >= 1e-12 || t > 1.0 - 1e-9);
    }

    #[test]
    fn cdf_is_monotone_and_symmetric(x in -38.0f64..38.0, dx in 0.0f64..1.0) {
        prop_assert!(norm_cdf(x + dx) >= norm_cdf(x));
        prop_assert!((norm_cdf(-x) - (1.0 - norm_cdf(x))).abs() <= CDF_ACCURACY);
    }

    #[test]
    fn quantile_inverts_cdf(t in 1e-300f64..(1.0 - 1e-16)) {
        let x = norm_quantile(t);
        let back = norm_cdf(x);
        prop_assert!((back - t).abs() <= 1e-14 * t.max(1e-16) + QUANTILE_ACCURACY * norm_pdf(x));
    }
}
