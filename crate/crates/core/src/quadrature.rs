//! Globally adaptive Gauss-Kronrod (10/21) quadrature.
//!
//! Panels are kept in a max-heap keyed by their error estimate; the worst
//! panel is bisected until the summed estimate meets
//! `max(abs, rel * |I|)`. Infinite endpoints are mapped onto `(0, 1]` with
//! `x = a + (1 - s) / s`, so tails are integrated exactly rather than cut off.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-10,
            abs: 1e-13,
            max_panels: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerance {
            rel,
            abs,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    // too narrow to split further
    frozen: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // frozen panels sink to the bottom
        match (self.frozen, other.frozen) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            _ => self.err.total_cmp(&other.err),
        }
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > e {
            e = min_err;
        }
    }
    e
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let err = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    (res_k * half, err)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    let (v0, e0) = gk21(f, a, b);
    let mut evals = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        err: e0,
        frozen: false,
    });
    let mut total = v0;
    let mut total_err = e0;
    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            return QuadResult {
                value: total,
                abs_err: total_err,
                evals,
                converged: true,
            };
        }
        if heap.len() >= tol.max_panels {
            break;
        }
        let worst = match heap.pop() {
            Some(p) if !p.frozen => p,
            Some(p) => {
                heap.push(p);
                break;
            }
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        let width = (worst.b - worst.a).abs();
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if width <= 64.0 * f64::EPSILON * scale || mid == worst.a || mid == worst.b {
            heap.push(Panel {
                frozen: true,
                ..worst
            });
            continue;
        }
        let (vl, el) = gk21(f, worst.a, mid);
        let (vr, er) = gk21(f, mid, worst.b);
        evals += 42;
        total += vl + vr - worst.value;
        total_err += el + er - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: vl,
            err: el,
            frozen: false,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: vr,
            err: er,
            frozen: false,
        });
    }
    // resum to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_err: f64 = heap.iter().map(|p| p.err).sum();
    let target = tol.abs.max(tol.rel * value.abs());
    QuadResult {
        value,
        abs_err,
        evals,
        converged: abs_err <= target,
    }
}

/// Integrate `f` over `[a, b]`, endpoints possibly infinite, and report the
/// outcome whether or not the tolerance was met.
pub fn integrate_raw<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    integrate_dyn(&f, a, b, tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a.is_nan() || b.is_nan() {
        return QuadResult {
            value: f64::NAN,
            abs_err: f64::INFINITY,
            evals: 0,
            converged: false,
        };
    }
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_err: 0.0,
            evals: 0,
            converged: true,
        };
    }
    if a > b {
        let r = integrate_dyn(f, b, a, tol);
        return QuadResult {
            value: -r.value,
            ..r
        };
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, tol),
        (true, false) => {
            let g = |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let x = a + (1.0 - s) / s;
                let v = f(x) / (s * s);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let x = b - (1.0 - s) / s;
                let v = f(x) / (s * s);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, false) => {
            let lo = integrate_dyn(f, f64::NEG_INFINITY, 0.0, tol);
            let hi = integrate_dyn(f, 0.0, f64::INFINITY, tol);
            QuadResult {
                value: lo.value + hi.value,
                abs_err: lo.abs_err + hi.abs_err,
                evals: lo.evals + hi.evals,
                converged: lo.converged && hi.converged,
            }
        }
    }
}

/// Integrate over a finite `[a, b]` where `f` may have an integrable
/// singularity like `|x - e|^(-1/2)` at a flagged end `e`.
///
/// `x = e ± (b - a) u²` turns such a singularity into a bounded integrand;
/// with both ends flagged the interval is split at its midpoint.
pub fn integrate_endpoint_singular<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, left: bool, right: bool, tol: Tolerance) -> QuadResult {
    endpoint_singular_dyn(&f, a, b, left, right, tol)
}

fn endpoint_singular_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, left: bool, right: bool, tol: Tolerance) -> QuadResult {
    if !(a.is_finite() && b.is_finite()) || a >= b || !(left || right) {
        return integrate_dyn(f, a, b, tol);
    }
    if left && right {
        let m = 0.5 * (a + b);
        let l = endpoint_singular_dyn(f, a, m, true, false, tol);
        let r = endpoint_singular_dyn(f, m, b, false, true, tol);
        return QuadResult {
            value: l.value + r.value,
            abs_err: l.abs_err + r.abs_err,
            evals: l.evals + r.evals,
            converged: l.converged && r.converged,
        };
    }
    let w = b - a;
    let g = |u: f64| {
        let mut x = if left { a + w * u * u } else { b - w * u * u };
        if x == if left { a } else { b } {
            // step one ulp inside rather than sample the end itself
            x = if left { a.next_up() } else { b.next_down() };
        }
        // the node whose image is exactly the rounded `x`; near a singular
        // end this keeps `g` smooth where `x - e` is only a few ulps
        let d = if left { x - a } else { b - x };
        let uq = (d / w).sqrt();
        let v = 2.0 * w * uq * f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // `x - e` carries only about `w / ulp(e)` distinct values, which bounds
    // the relative accuracy any refinement can reach
    let resolution = f64::EPSILON * a.abs().max(b.abs()) / w;
    let tol = Tolerance {
        rel: tol.rel.max(resolution),
        ..tol
    };
    adaptive(&g, 0.0, 1.0, tol)
}

/// Integrate `f` over `[a, b]`; non-convergence is an error carrying the
/// achieved error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    let r = integrate_raw(f, a, b, tol);
    if !r.value.is_finite() {
        return Err(Error::numeric("quadrature (non-finite value)", r.abs_err));
    }
    if !r.converged {
        return Err(Error::numeric("quadrature", r.abs_err));
    }
    Ok(r.value)
}

/// Integrate over consecutive pieces `[p0, p1], [p1, p2], ...`, which lets
/// callers place breakpoints at kinks of the integrand.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<f64> {
    let mut total = 0.0;
    let mut err = 0.0;
    let mut ok = true;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = integrate_raw(&f, w[0], w[1], tol);
        total += r.value;
        err += r.abs_err;
        ok &= r.converged;
    }
    let target = tol.abs.max(tol.rel * total.abs());
    if !total.is_finite() || (!ok && err > target) {
        return Err(Error::numeric("piecewise quadrature", err));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_singularity_is_resolved() {
        let tol = Tolerance { rel: 1e-13, abs: 1e-300, max_panels: 400 };
        let r = integrate_endpoint_singular(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, true, false, tol);
        assert!(r.converged && (r.value - 2.0).abs() < 1e-13, "{r:?}");
        let r = integrate_endpoint_singular(|x: f64| 1.0 / (1.0 - x).sqrt() + 1.0 / x.sqrt(), 0.0, 1.0, true, true, tol);
        assert!(r.converged && (r.value - 4.0).abs() < 1e-12, "{r:?}");
        let r = integrate_endpoint_singular(|x: f64| x.exp(), 0.0, 1.0, false, true, tol);
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn singular_end_away_from_zero() {
        let tol = Tolerance { rel: 1e-13, abs: 1e-300, max_panels: 400 };
        let e = -0.367_879_441_171_442_33;
        let f = move |x: f64| if x > e { 1.0 / (x - e).sqrt() } else { 0.0 };
        for w in [1e-2, 1e-7, 1e-11, 1e-14] {
            let r = integrate_endpoint_singular(f, e, e + w, true, false, tol);
            let exact = 2.0 * ((e + w) - e).sqrt();
            assert!(r.converged && r.evals < 500, "w = {w}: {r:?}");
            assert!((r.value - exact).abs() < 1e-12 * exact, "w = {w}: {} vs {exact}", r.value);
        }
    }
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
        let v = integrate(|x| x.powi(6), -1.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_and_empty() {
        let v = integrate(|x| x, 1.0, 0.0, Tolerance::default()).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
        assert_eq!(integrate(|x| x, 3.0, 3.0, Tolerance::default()).unwrap(), 0.0);
    }

    #[test]
    fn infinite_ranges() {
        let g = |x: f64| (-0.5 * x * x).exp();
        let v = integrate(g, f64::NEG_INFINITY, f64::INFINITY, Tolerance::default()).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-12);
        let v = integrate(|x: f64| (-x).exp(), 0.0, f64::INFINITY, Tolerance::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = integrate(|x: f64| (1.0 - x).powi(-3), f64::NEG_INFINITY, 0.0, Tolerance::default())
            .unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-11, 1e-13)).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = integrate(|x: f64| x.ln(), 0.0, 1.0, Tolerance::new(1e-11, 1e-13)).unwrap();
        assert!((v + 1.0).abs() < 1e-10);
    }

    #[test]
    fn divergent_integral_reports_failure() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::default());
        assert!(r.is_err());
    }

    #[test]
    fn pieces_with_kinks() {
        let v = integrate_pieces(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], Tolerance::default()).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }
}
