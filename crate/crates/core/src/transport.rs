//! Monotone transport of the standard Gaussian onto measures on the line.
//!
//! A measure of mass `m ≤ 1` is matched with the upper Gaussian tail of the
//! same mass: `Φ_μ(T(s)) = Φ(s) - (1 - m)` for `s > Φ⁻¹(1 - m)`. For a
//! probability measure this is `T = Φ_μ⁻¹ ∘ Φ` on the whole line.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::concavity::{affinity_score, chebyshev_levels, test_shape, Shape, ShapeVerdict, SHAPE_TOL};
use crate::error::{Error, Result};
use crate::gaussian::{ehrhard_grunbaum_bound, lambert_w0, lambert_w0_plus_one_at_offset, norm_cdf, norm_pdf, norm_quantile, norm_sf};
use crate::measure1d::Density1D;
use crate::report::{CutReport, Oracle};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Round-trip tolerance `T(T⁻¹(x)) = x` on the construction probes.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Gap slack for the transported Gaussian bound.
pub const TRANSPORT_GAP_SLACK: f64 = 1e-7;
/// Acceptance threshold for linearity of an even transport map.
pub const EVEN_FIT_TOL: f64 = 1e-6;

/// A strictly increasing map on an interval of the Gaussian line.
#[derive(Clone)]
pub struct TransportMap {
    forward: RealFn,
    inverse: RealFn,
    derivative: Option<RealFn>,
    /// Interval of `s` on which the map is defined and increasing.
    pub domain: (f64, f64),
    pub label: String,
}

impl std::fmt::Debug for TransportMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransportMap")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish()
    }
}

impl TransportMap {
    /// Wraps evaluators and checks monotonicity and the inverse on probes.
    pub fn new(
        label: &str,
        forward: RealFn,
        inverse: RealFn,
        derivative: Option<RealFn>,
        domain: (f64, f64),
    ) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(Error::invalid("empty transport domain"));
        }
        let map = TransportMap {
            forward,
            inverse,
            derivative,
            domain,
            label: label.to_string(),
        };
        map.check()?;
        Ok(map)
    }

    fn probes(&self) -> Vec<f64> {
        let (lo, hi) = (self.domain.0.max(-8.0), self.domain.1.min(8.0));
        let (lo, hi) = if lo < hi { (lo, hi) } else { self.domain };
        chebyshev_levels(200)
            .into_iter()
            .map(|t| lo + (hi - lo) * t)
            .collect()
    }

    fn check(&self) -> Result<()> {
        let ss = self.probes();
        let ts: Vec<f64> = ss.iter().map(|&s| self.eval(s)).collect();
        // near saturation quantile noise can reverse neighbours at the 1e-15 level
        let drops = ts.windows(2).any(|w| !(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs())));
        if drops || !(ts[ts.len() - 1] > ts[0]) {
            return Err(Error::invalid(format!("map {} is not strictly increasing", self.label)));
        }
        for &t in &ts {
            let back = self.eval(self.inv(t));
            if (back - t).abs() > ROUND_TRIP_TOL * (1.0 + t.abs()) {
                return Err(Error::Inconsistency {
                    what: format!("inverse of {}", self.label),
                    first: t,
                    second: back,
                });
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.forward)(s)
    }

    pub fn inv(&self, x: f64) -> f64 {
        (self.inverse)(x)
    }

    /// `T'(s)`, analytic when supplied, else a central difference.
    pub fn deriv(&self, s: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(s),
            None => self.numeric_deriv(s),
        }
    }

    /// Central difference with step `max(1e-6, 1e-6 |s|)`, one-sided at the
    /// domain ends.
    pub fn numeric_deriv(&self, s: f64) -> f64 {
        let h = 1e-6f64.max(1e-6 * s.abs());
        let (lo, hi) = self.domain;
        let (a, b) = ((s - h).max(lo), (s + h).min(hi));
        if b <= a {
            return f64::NAN;
        }
        (self.eval(b) - self.eval(a)) / (b - a)
    }

    /// Gaussian mass of the domain, which is the mass of the image measure.
    pub fn gaussian_mass(&self) -> f64 {
        gaussian_interval(self.domain.0, self.domain.1)
    }

    /// `T(s) = mean + sigma s`.
    pub fn linear(sigma: f64, mean: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("linear map needs a positive slope"));
        }
        Self::new(
            &format!("linear({sigma})"),
            Arc::new(move |s| mean + sigma * s),
            Arc::new(move |x| (x - mean) / sigma),
            Some(Arc::new(move |_| sigma)),
            (f64::NEG_INFINITY, f64::INFINITY),
        )
    }

    /// `T(s) = s e^s` on `(-1, ∞)`, where it is increasing and convex.
    pub fn lambert() -> Result<Self> {
        Self::new(
            "lambert",
            Arc::new(|s: f64| s * s.exp()),
            Arc::new(|x: f64| lambert_w0(x.max(-(-1.0f64).exp())).unwrap_or(f64::NAN)),
            Some(Arc::new(|s: f64| (1.0 + s) * s.exp())),
            (-1.0, f64::INFINITY),
        )
    }

    /// Monotone cubic (Fritsch–Carlson) interpolation of increasing knots.
    pub fn custom_table(s: &[f64], t: &[f64]) -> Result<Self> {
        let spline = Arc::new(MonotoneSpline::new(s, t)?);
        let (f, i, d) = (spline.clone(), spline.clone(), spline.clone());
        Self::new(
            "custom-table",
            Arc::new(move |x| f.eval(x)),
            Arc::new(move |y| i.inverse(y)),
            Some(Arc::new(move |x| d.deriv(x))),
            (s[0], s[s.len() - 1]),
        )
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant.
struct MonotoneSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneSpline {
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || n != y.len() {
            return Err(Error::invalid("table map needs matching knots, at least two"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("table map knots must be strictly increasing"));
        }
        let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for k in 1..n - 1 {
            m[k] = 0.5 * (d[k - 1] + d[k]);
        }
        for k in 0..n - 1 {
            let (a, b) = (m[k] / d[k], m[k + 1] / d[k]);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m[k] = tau * a * d[k];
                m[k + 1] = tau * b * d[k];
            }
        }
        Ok(MonotoneSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    fn seg(&self, v: f64) -> usize {
        self.x.partition_point(|&a| a <= v).clamp(1, self.x.len() - 1) - 1
    }

    fn eval(&self, v: f64) -> f64 {
        let k = self.seg(v);
        let h = self.x[k + 1] - self.x[k];
        let t = (v - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[k]
            + (t3 - 2.0 * t2 + t) * h * self.m[k]
            + (-2.0 * t3 + 3.0 * t2) * self.y[k + 1]
            + (t3 - t2) * h * self.m[k + 1]
    }

    fn deriv(&self, v: f64) -> f64 {
        let k = self.seg(v);
        let h = self.x[k + 1] - self.x[k];
        let t = (v - self.x[k]) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.y[k]
            + (-6.0 * t2 + 6.0 * t) * self.y[k + 1])
            / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.m[k]
            + (3.0 * t2 - 2.0 * t) * self.m[k + 1]
    }

    fn inverse(&self, target: f64) -> f64 {
        let k = self.y.partition_point(|&a| a <= target).clamp(1, self.y.len() - 1) - 1;
        let (mut lo, mut hi) = (self.x[k], self.x[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// JSON description of a transport map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSpec {
    Linear {
        sigma: f64,
        #[serde(default)]
        mean: f64,
    },
    Lambert,
    CustomTable { s: Vec<f64>, t: Vec<f64> },
}

impl MapSpec {
    pub fn build(&self) -> Result<TransportMap> {
        match self {
            MapSpec::Linear { sigma, mean } => TransportMap::linear(*sigma, *mean),
            MapSpec::Lambert => TransportMap::lambert(),
            MapSpec::CustomTable { s, t } => TransportMap::custom_table(s, t),
        }
    }
}

/// Lower end of the Gaussian interval matched to a measure of mass `m`.
fn matched_start(m: f64) -> f64 {
    if m >= 1.0 {
        f64::NEG_INFINITY
    } else {
        norm_quantile(1.0 - m)
    }
}

/// `s ↦ Φ⁻¹(Φ_μ(x) + 1 - m)`, evaluated through the smaller tail.
fn gaussian_coordinate(mu: &Density1D, x: f64) -> f64 {
    let m = mu.total_mass();
    let (lo, hi) = mu.support();
    if x <= lo {
        return matched_start(m);
    }
    if x >= hi {
        return f64::INFINITY;
    }
    let upper = mu.sf(x).unwrap_or(f64::NAN);
    if upper < 0.5 {
        -norm_quantile(upper)
    } else {
        norm_quantile(mu.cdf(x).unwrap_or(f64::NAN) + (1.0 - m))
    }
}

/// The monotone map carrying the Gaussian onto `mu`.
pub fn transport_from_measure(mu: &Density1D) -> Result<TransportMap> {
    let m = mu.total_mass();
    if m > 1.0 + 1e-9 {
        return Err(Error::invalid(format!("measure of mass {m} exceeds the Gaussian")));
    }
    let start = matched_start(m);
    let (fwd, inv, der) = (mu.clone(), mu.clone(), mu.clone());
    let alpha = mu.support().0;
    let forward: RealFn = Arc::new(move |s: f64| {
        // Φ_μ(T(s)) = Φ(s) - (1 - m) is the same as μ((T(s), β)) = Φ(-s)
        let tail = norm_sf(s);
        if tail <= 0.5 * m {
            return fwd.isf(tail).unwrap_or(f64::NAN);
        }
        let level = norm_cdf(s) - (1.0 - m.min(1.0));
        if s <= start || level <= 0.0 {
            return alpha;
        }
        fwd.q(level).unwrap_or(f64::NAN)
    });
    let f2 = forward.clone();
    let derivative: RealFn = Arc::new(move |s: f64| norm_pdf(s) / der.eval(f2(s)));
    let inverse: RealFn = Arc::new(move |x: f64| gaussian_coordinate(&inv, x));
    TransportMap::new(
        &format!("transport({})", mu.label()),
        forward,
        inverse,
        Some(derivative),
        (start, f64::INFINITY),
    )
}

/// Density of the image of the Gaussian under `T`:
/// `ψ(x) = φ(T⁻¹(x)) / T'(T⁻¹(x))` on `T(domain)`.
pub fn measure_from_convex_map(map: &TransportMap) -> Result<Density1D> {
    let (s0, s1) = map.domain;
    // an infinite domain end may still map to a finite support end
    let end = |s: f64, inf: f64| match map.eval(s) {
        v if v.is_finite() || !s.is_finite() && !v.is_nan() => v,
        v if s.is_finite() => v,
        _ => inf,
    };
    let lo = end(s0, f64::NEG_INFINITY);
    let hi = end(s1, f64::INFINITY);
    if lo.is_nan() || hi.is_nan() || !(lo < hi) {
        return Err(Error::invalid(format!("{} has no usable range ({lo}, {hi})", map.label)));
    }
    let mass = map.gaussian_mass();
    let m2 = map.clone();
    let psi = move |x: f64| {
        if !(x > lo && x < hi) {
            return 0.0;
        }
        let s = m2.inv(x);
        let d = m2.deriv(s);
        if d > 0.0 && d.is_finite() {
            norm_pdf(s) / d
        } else {
            0.0
        }
    };
    let center = map.eval(0.0f64.clamp(s0.max(-1e300), s1.min(1e300)));
    let scale = map.deriv(0.0f64.clamp(s0, s1)).abs().clamp(1e-6, 1e6);
    let center = if center.is_finite() { center.clamp(lo, hi) } else { 0.0 };
    let zero = map.eval(0.0);
    let breaks: Vec<f64> = [zero].into_iter().filter(|x| x.is_finite() && *x > lo && *x < hi).collect();
    let (ci, si) = (map.clone(), map.clone());
    let below = move |x: f64| gaussian_interval(s0, ci.inv(x));
    let above = move |x: f64| gaussian_interval(si.inv(x), s1);
    Density1D::builder(psi, lo, hi)
        .distribution(below, above)
        .center(center)
        .breakpoints(&breaks)
        .scale(if scale.is_finite() { scale } else { 1.0 })
        .expect_mass(mass)
        .label(format!("pushforward({})", map.label))
        .build()
}

/// `γ((a, b))`, through whichever tail avoids cancellation.
fn gaussian_interval(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

/// The image of the Gaussian under `s ↦ s e^s` restricted to `(-1, ∞)`:
/// `ψ(x) = φ(W(x)) e^{-W(x)} / (1 + W(x))` on `[-1/e, ∞)`, of mass `Φ(1)`.
///
/// The rounded support end is treated as the exact branch point, so the
/// `1/√` singularity sits on the end instead of 1e-17 inside it.
pub fn lambert_density() -> Result<Density1D> {
    let lo = -(-1.0f64).exp();
    Density1D::builder(
        move |x: f64| {
            if x <= lo {
                return 0.0;
            }
            match lambert_w0_plus_one_at_offset(std::f64::consts::E * (x - lo)) {
                Ok(q) if q > 0.0 => {
                    let w = q - 1.0;
                    norm_pdf(w) * (-w).exp() / q
                }
                _ => 0.0,
            }
        },
        lo,
        f64::INFINITY,
    )
    .center(0.0)
    .scale(1.0)
    .breakpoints(&[0.0])
    .expect_mass(norm_cdf(1.0))
    .label("lambert")
    .build()
}

/// Tests concavity of `x ↦ Φ⁻¹(Φ_μ(x) + 1 - m)` on interior quantile points.
pub fn is_gamma_transport_concave(mu: &Density1D) -> Result<ShapeVerdict> {
    let (xs, ys) = gaussian_coordinate_profile(mu, 512)?;
    Ok(test_shape(&xs, &ys, Shape::Concave, SHAPE_TOL))
}

fn gaussian_coordinate_profile(mu: &Density1D, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = mu.total_mass();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for tau in chebyshev_levels(n) {
        let x = mu.q(tau * m)?;
        if xs.last().is_some_and(|&p| x <= p) {
            continue;
        }
        xs.push(x);
        ys.push(gaussian_coordinate(mu, x));
    }
    Ok((xs, ys))
}

/// `max |ψ(T(s)) T'(s) − φ(s)|` over the grid points inside the map's domain.
///
/// `T'` is always taken by central differences so the check does not reuse
/// any derivative built from `ψ` itself.
pub fn monge_ampere_residual(mu: &Density1D, map: &TransportMap, grid: &[f64]) -> f64 {
    let (lo, hi) = map.domain;
    grid.iter()
        .filter(|&&s| s > lo && s < hi)
        .map(|&s| (mu.eval(map.eval(s)) * map.numeric_deriv(s) - norm_pdf(s)).abs())
        .fold(0.0, f64::max)
}

/// Compares `μ((a, g])` with `Φ(−I_γ(t)/t)`, `t = μ((a, b))`, for a
/// γ-transport-concave `μ`.
pub fn transport_grunbaum_verify(mu: &Density1D, a: f64, b: f64) -> Result<CutReport> {
    let verdict = is_gamma_transport_concave(mu)?;
    if !verdict.holds {
        return Err(Error::Precondition(format!(
            "{} is not γ-transport concave (worst violation {:.3e})",
            mu.label(),
            verdict.worst_violation
        )));
    }
    let t = mu.interval_mass(a, b)?;
    if t <= 0.0 {
        return Err(Error::domain(format!("zero mass on ({a}, {b})")));
    }
    let g = mu.truncated_barycenter(a, b)?;
    let measured = mu.interval_mass(a, g)?;
    let upper = mu.interval_mass(g, b)?;
    let bound = ehrhard_grunbaum_bound(t.min(1.0))?.value();
    let (xs, ys) = gaussian_coordinate_profile(mu, 256)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = xs
        .into_iter()
        .zip(ys)
        .filter(|(x, _)| *x > a && *x < b)
        .unzip();
    let affinity = affinity_score(&xs, &ys);
    Ok(CutReport::new(
        "gamma-transport",
        1,
        vec![1.0],
        g,
        t,
        measured,
        bound,
        Some(affinity),
        Oracle::quadrature("quadrature", 1e-10),
    )
    .with_id(mu.label())
    .with_sides(measured, upper))
}

/// Result of the linearity test for an even measure's transport map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvenTestResult {
    /// Least-squares slope; reported only when accepted.
    pub sigma: Option<f64>,
    pub fitted_slope: f64,
    pub max_residual: f64,
    /// `(s, T(s) − slope·s)` on the fit grid.
    pub residuals: Vec<(f64, f64)>,
}

impl EvenTestResult {
    pub fn accepted(&self) -> bool {
        self.sigma.is_some()
    }
}

/// Fits `T(s) ≈ σ s` on `[-4, 4]`; accepts when the map is linear to
/// [`EVEN_FIT_TOL`], which happens exactly for centered Gaussians.
pub fn even_transport_gaussian_test(mu: &Density1D) -> Result<EvenTestResult> {
    let m = mu.total_mass();
    if (m - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("measure has mass {m}, not 1")));
    }
    let (lo, hi) = mu.support();
    let span = hi.min(-lo).min(10.0 * mu.scale_hint());
    for k in 1..=64 {
        let r = span * k as f64 / 65.0;
        let (a, b) = (mu.eval(r), mu.eval(-r));
        if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1e-300) {
            return Err(Error::Precondition(format!(
                "{} is not even: ψ({r}) = {a}, ψ(-{r}) = {b}",
                mu.label()
            )));
        }
    }
    let map = transport_from_measure(mu)?;
    let ss: Vec<f64> = (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect();
    let ts: Vec<f64> = ss.iter().map(|&s| map.eval(s)).collect();
    let num: f64 = ss.iter().zip(&ts).map(|(s, t)| s * t).sum();
    let den: f64 = ss.iter().map(|s| s * s).sum();
    let slope = num / den;
    let residuals: Vec<(f64, f64)> = ss.iter().zip(&ts).map(|(&s, &t)| (s, t - slope * s)).collect();
    let max_residual = residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    Ok(EvenTestResult {
        sigma: (max_residual <= EVEN_FIT_TOL).then_some(slope),
        fitted_slope: slope,
        max_residual,
        residuals,
    })
}
