//! Standard normal special functions and the Gaussian cut bounds.
//!
//! `norm_cdf` splits at `|x| = 0.5`: inside it uses `erf` (no cancellation
//! near the median), outside it uses `erfc` so both tails keep full relative
//! accuracy. `norm_quantile` starts from a rational approximation and polishes
//! the result with two Halley steps against `norm_cdf`.

use std::f64::consts::{E, FRAC_1_SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 / sqrt(2 pi)`, the standard normal density at zero.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Absolute accuracy of [`norm_cdf`] over the whole real line.
pub const CDF_ACCURACY: f64 = 1e-14;
/// Absolute accuracy of [`norm_quantile`] on `[1e-300, 1 - 1e-16]`.
pub const QUANTILE_ACCURACY: f64 = 1e-12;

/// A value in `[0, 1]`. NaN is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::invalid("probability is NaN"));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(format!(
                "probability {value} outside [0, 1]"
            )));
        }
        Ok(Probability(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Result of a quantile evaluation. `boundary` is set when the argument was
/// exactly 0 or 1 and the value is the conventional signed infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileValue {
    pub value: f64,
    pub boundary: bool,
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF. NaN in, NaN out.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < 0.5 {
        0.5 + 0.5 * libm::erf(x * FRAC_1_SQRT_2)
    } else if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// Checked `Phi(x)`; infinities are accepted, NaN is rejected.
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    if x.is_nan() {
        return Err(Error::invalid("std_normal_cdf of NaN"));
    }
    Ok(Probability(norm_cdf(x)))
}

// Rational approximation of the lower half of the quantile (relative error
// about 1e-9), used only as the starting point for Halley refinement.
fn quantile_seed(t: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if t < 0.02425 {
        let q = (-2.0 * t.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = t - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

fn quantile_lower(t: f64) -> f64 {
    let mut x = quantile_seed(t);
    for _ in 0..2 {
        let dens = norm_pdf(x);
        if dens == 0.0 {
            break;
        }
        let u = (norm_cdf(x) - t) / dens;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Standard normal quantile on `[0, 1]`; `0 -> -inf`, `1 -> +inf`,
/// NaN or out-of-range arguments give NaN.
pub fn norm_quantile(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return f64::NAN;
    }
    if t == 0.0 {
        return f64::NEG_INFINITY;
    }
    if t == 1.0 {
        return f64::INFINITY;
    }
    if t == 0.5 {
        return 0.0;
    }
    if t < 0.5 {
        quantile_lower(t)
    } else {
        // 1 - t is exact for t >= 1/2
        -quantile_lower(1.0 - t)
    }
}

/// Checked `Phi^{-1}(t)`. The endpoints map to signed infinities and are
/// flagged as boundary values instead of being clamped.
pub fn std_normal_quantile(t: f64) -> Result<QuantileValue> {
    if t.is_nan() || !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("quantile argument {t} outside [0, 1]")));
    }
    Ok(QuantileValue {
        value: norm_quantile(t),
        boundary: t == 0.0 || t == 1.0,
    })
}

/// `I(t) = phi(Phi^{-1}(t))`, extended by zero at both endpoints.
pub fn isoperimetric(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    norm_pdf(norm_quantile(t))
}

/// Checked Gaussian isoperimetric profile.
pub fn gaussian_isoperimetric(t: f64) -> Result<f64> {
    Probability::new(t)?;
    Ok(isoperimetric(t))
}

fn check_mass(t: f64, what: &str) -> Result<()> {
    Probability::new(t)?;
    if t == 0.0 {
        return Err(Error::domain(format!("{what}: the bound degenerates at t = 0")));
    }
    Ok(())
}

/// Lower bound `Phi(-I(t)/t)` on the Gaussian mass of the part of a convex set
/// of Gaussian mass `t` lying on either side of a hyperplane through its
/// Gaussian barycenter.
pub fn ehrhard_grunbaum_bound(t: f64) -> Result<Probability> {
    check_mass(t, "ehrhard_grunbaum_bound")?;
    Ok(Probability(norm_cdf(-isoperimetric(t) / t)))
}

/// `I(t)/t`, the bound on `|Phi^{-1}(gamma(K cap H^-))|`.
pub fn quantile_cut_bound_abs(t: f64) -> Result<f64> {
    check_mass(t, "quantile_cut_bound_abs")?;
    Ok(isoperimetric(t) / t)
}

// 1/e as an unevaluated sum; `x + INV_E_HI` is exact near the branch point
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;
/// Below this `e (x + 1/e)` the branch-point solver is used (`1 + W < 0.45`).
const BRANCH_ZONE: f64 = 0.09;

/// `e (x + 1/e)`, accurate to relative rounding even next to `-1/e`.
fn branch_offset(x: f64) -> f64 {
    E * ((x + INV_E_HI) + INV_E_LO)
}

/// Solves `1 - (1 - q) e^q = b` for `q = 1 + W` with `b` small.
///
/// The left side is summed as `Σ_{k≥2} (k-1) q^k / k!`, so there is no
/// cancellation and `q` keeps full relative precision.
fn branch_solve(b: f64) -> f64 {
    let g = |q: f64| {
        let (mut term, mut sum) = (q, 0.0);
        for k in 2..40 {
            term *= q / k as f64;
            let add = (k - 1) as f64 * term;
            sum += add;
            if add < 1e-18 * sum {
                break;
            }
        }
        sum
    };
    let p = (2.0 * b).sqrt();
    let mut q = p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    for _ in 0..50 {
        let step = (g(q) - b) / (q * q.exp());
        q -= step;
        if step.abs() <= 1e-16 * q {
            break;
        }
    }
    q
}

/// Principal branch of the Lambert W function, `W(x) e^{W(x)} = x`, `x >= -1/e`.
///
/// Next to `-1/e` the value comes from [`lambert_w0_plus_one`]. Elsewhere
/// Halley iteration runs from `ln(1 + x)` for moderate arguments or from the
/// asymptotic `L1 - L2 + L2/L1` for large ones, until the relative residual
/// `|W e^W - x| / max(1, |x|)` is below `1e-13`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::invalid("lambert_w0 of NaN"));
    }
    let b = branch_offset(x);
    if b < -4.0 * f64::EPSILON {
        return Err(Error::domain(format!("lambert_w0 undefined for x = {x} < -1/e")));
    }
    if b <= 0.0 {
        return Ok(-1.0);
    }
    if b < BRANCH_ZONE {
        return Ok(branch_solve(b) - 1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < 3.0 {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    let scale = x.abs().max(1.0);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= 1e-13 * scale {
            break;
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if next == w {
            break;
        }
        w = next.max(-1.0);
    }
    let residual = (w * w.exp() - x).abs() / scale;
    if residual > 1e-12 {
        return Err(Error::numeric("lambert_w0", residual));
    }
    Ok(w)
}

/// `1 + W(x)` for `x = b/e - 1/e`, taking the branch offset `b = e (x + 1/e)`
/// itself as input so callers can place the branch point exactly.
pub fn lambert_w0_plus_one_at_offset(b: f64) -> Result<f64> {
    if b.is_nan() || b < 0.0 {
        return Err(Error::domain(format!("branch offset {b} is negative")));
    }
    if b < BRANCH_ZONE {
        return Ok(branch_solve(b));
    }
    Ok(1.0 + lambert_w0(b / E - (INV_E_HI + INV_E_LO))?)
}

/// `1 + W(x)`, with full relative precision next to the branch point where
/// forming `1 + lambert_w0(x)` would cancel.
pub fn lambert_w0_plus_one(x: f64) -> Result<f64> {
    let b = branch_offset(x);
    if b > 0.0 && b < BRANCH_ZONE {
        return Ok(branch_solve(b));
    }
    Ok(1.0 + lambert_w0(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
        assert!(std_normal_cdf(f64::NAN).is_err());
        // Phi(1.959963985) from an independent series evaluation of erf
        assert!((norm_cdf(1.959_963_985) - 0.975).abs() < 1e-10);
    }

    #[test]
    fn cdf_symmetry() {
        for i in 0..200 {
            let x = -10.0 + 0.1 * i as f64;
            let s = norm_cdf(x) + norm_cdf(-x);
            assert!((s - 1.0).abs() <= CDF_ACCURACY, "x = {x}");
        }
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(norm_quantile(0.5), 0.0);
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        let lo = std_normal_quantile(0.0).unwrap();
        assert!(lo.boundary && lo.value == f64::NEG_INFINITY);
        let hi = std_normal_quantile(1.0).unwrap();
        assert!(hi.boundary && hi.value == f64::INFINITY);
        assert!(std_normal_quantile(1.5).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        for i in 0..=1600 {
            let x = -8.0 + 0.01 * i as f64;
            let back = norm_quantile(norm_cdf(x));
            // above the median Phi(x) is rounded to a spacing of 1.1e-16,
            // which no inverse can undo; allow that conditioning
            let tol = if x > 0.0 { 1e-11 + 1.2e-16 / norm_pdf(x) } else { 1e-11 };
            assert!((back - x).abs() < tol, "x = {x}, back = {back}");
        }
    }

    #[test]
    fn quantile_deep_tail() {
        let x = norm_quantile(1e-300);
        assert!((norm_cdf(x) / 1e-300 - 1.0).abs() < 1e-12);
        let y = norm_quantile(1e-16);
        assert!((norm_cdf(y) / 1e-16 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn isoperimetric_values() {
        assert!((isoperimetric(0.5) - INV_SQRT_2PI).abs() < 1e-16);
        assert_eq!(isoperimetric(0.0), 0.0);
        assert_eq!(isoperimetric(1.0), 0.0);
        for t in [0.1, 0.25, 0.4] {
            assert!((isoperimetric(t) - isoperimetric(1.0 - t)).abs() < 1e-15);
        }
        assert!(gaussian_isoperimetric(-0.1).is_err());
    }

    #[test]
    fn ehrhard_bound_values() {
        assert_eq!(ehrhard_grunbaum_bound(1.0).unwrap().value(), 0.5);
        let half = ehrhard_grunbaum_bound(0.5).unwrap().value();
        assert!((half - norm_cdf(-2.0 * INV_SQRT_2PI)).abs() < 1e-15);
        assert!((half - 0.212_468_741_841_681).abs() < 1e-13);
        assert!(ehrhard_grunbaum_bound(0.0).is_err());
        for k in 1..10 {
            let t = k as f64 / 10.0;
            assert!(ehrhard_grunbaum_bound(t).unwrap().value() >= t / E);
        }
    }

    #[test]
    fn quantile_cut_bound_values() {
        assert_eq!(quantile_cut_bound_abs(1.0).unwrap(), 0.0);
        assert!((quantile_cut_bound_abs(0.5).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-15);
        for t in [0.05, 0.3, 0.77, 1.0] {
            let a = norm_cdf(-quantile_cut_bound_abs(t).unwrap());
            let b = ehrhard_grunbaum_bound(t).unwrap().value();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn lambert_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
        assert!(lambert_w0(-0.5).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_near_branch_point() {
        // 1 + W(x) at 40-digit precision for the f64 inputs shown
        let refs = [
            (-0.366_879_441_171_442_33, 0.071_979_849_945_432_545_684),
            (-0.367_878_441_171_442_36, 0.002_329_833_727_946_499_866_2),
            (-0.367_879_440_171_442_3, 0.000_073_731_245_163_675_018_054),
            (-0.367_879_441_170_442_36, 2.331_601_889_423_718_438_1e-6),
        ];
        for (x, q) in refs {
            let got = lambert_w0_plus_one(x).unwrap();
            assert!(((got - q) / q).abs() < 1e-14, "x={x}: {got} vs {q}");
            assert!((lambert_w0(x).unwrap() - (q - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn lambert_residual_on_log_grid() {
        let x0 = -1.0 / E + 1e-9;
        let mut xs = vec![x0, -0.3, -0.1, -1e-5, 1e-8];
        for i in 0..=140 {
            xs.push(10f64.powf(-8.0 + 0.1 * i as f64));
        }
        for x in xs {
            let w = lambert_w0(x).unwrap();
            let r = (w * w.exp() - x).abs() / x.abs().max(1.0);
            assert!(r <= 1e-12, "x = {x}, residual {r}");
        }
    }
}
