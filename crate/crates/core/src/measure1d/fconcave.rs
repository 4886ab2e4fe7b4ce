use std::sync::Arc;

use crate::concavity::{affinity_score, chebyshev_levels, test_shape, Shape, SHAPE_TOL};
use crate::error::{Error, Result};
use crate::gaussian::{isoperimetric, norm_cdf, norm_quantile};
use crate::quadrature::{integrate_raw, Tolerance};
use crate::report::{CutReport, Oracle};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const PROBES: usize = 64;

/// A strictly monotone transform `F` on `(0, upper)` used to state an
/// F-concavity hypothesis.
#[derive(Clone)]
pub struct BoundSpec {
    name: String,
    f: RealFn,
    inverse: Option<RealFn>,
    /// `r ↦ ∫₀ʳ F`.
    primitive: Option<RealFn>,
    increasing: bool,
    upper: f64,
}

impl std::fmt::Debug for BoundSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundSpec")
            .field("name", &self.name)
            .field("increasing", &self.increasing)
            .field("primitive_available", &self.primitive.is_some())
            .finish()
    }
}

impl BoundSpec {
    /// Wraps `f`, verifying the declared monotonicity on 64 probes.
    pub fn custom<F>(name: &str, f: F, increasing: bool, upper: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let spec = BoundSpec {
            name: name.to_string(),
            f: Arc::new(f),
            inverse: None,
            primitive: None,
            increasing,
            upper,
        };
        spec.check_monotone()?;
        Ok(spec)
    }

    pub fn with_inverse<G>(mut self, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(g));
        self
    }

    /// `p(r) = ∫₀ʳ F`.
    pub fn with_primitive<G>(mut self, p: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.primitive = Some(Arc::new(p));
        self
    }

    pub fn identity() -> Self {
        Self::custom("identity", |r| r, true, f64::INFINITY)
            .unwrap()
            .with_inverse(|y| y)
            .with_primitive(|r| 0.5 * r * r)
    }

    pub fn log() -> Self {
        Self::custom("log", f64::ln, true, f64::INFINITY)
            .unwrap()
            .with_inverse(f64::exp)
            .with_primitive(|r| if r == 0.0 { 0.0 } else { r * r.ln() - r })
    }

    /// `F(r) = r^s`, decreasing for `s < 0`; `s = 0` gives [`BoundSpec::log`].
    pub fn power(s: f64) -> Result<Self> {
        if s == 0.0 {
            return Ok(Self::log());
        }
        if !s.is_finite() {
            return Err(Error::invalid("power exponent must be finite"));
        }
        let spec = Self::custom(&format!("power({s})"), move |r| r.powf(s), s > 0.0, f64::INFINITY)?
            .with_inverse(move |y| y.powf(1.0 / s));
        Ok(if s > -1.0 {
            spec.with_primitive(move |r| r.powf(s + 1.0) / (s + 1.0))
        } else {
            spec
        })
    }

    /// `F = Φ⁻¹` on `(0, 1)`, whose primitive is `−I_γ`.
    pub fn gaussian_quantile() -> Self {
        Self::custom("gaussian-quantile", norm_quantile, true, 1.0)
            .unwrap()
            .with_inverse(norm_cdf)
            .with_primitive(|r| -isoperimetric(r))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn primitive_available(&self) -> bool {
        self.primitive.is_some()
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    fn probes(&self) -> Vec<f64> {
        if self.upper.is_finite() {
            chebyshev_levels(PROBES)
                .into_iter()
                .map(|t| t * self.upper)
                .collect()
        } else {
            (0..PROBES)
                .map(|k| 10f64.powf(-6.0 + 12.0 * k as f64 / (PROBES - 1) as f64))
                .collect()
        }
    }

    fn check_monotone(&self) -> Result<()> {
        let xs = self.probes();
        let ys: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
        let ok = ys.windows(2).all(|w| {
            if self.increasing {
                w[1] > w[0]
            } else {
                w[1] < w[0]
            }
        });
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{} is not strictly {} on its probes",
                self.name,
                if self.increasing { "increasing" } else { "decreasing" }
            )))
        }
    }

    /// `(1/t)∫₀ᵗ F`.
    pub fn mean_on(&self, t: f64) -> Result<f64> {
        if let Some(p) = &self.primitive {
            return Ok(p(t) / t);
        }
        // r F(r) must vanish at 0 for local integrability
        let probe: Vec<f64> = [1e-50, 1e-100, 1e-200, 1e-300]
            .iter()
            .map(|&k| (k * t * self.eval(k * t)).abs())
            .collect();
        let tail_ok = probe.iter().all(|v| v.is_finite())
            && probe[3] <= probe[0]
            && probe[3] < 1e-3 * (1.0 + (t * self.eval(t)).abs());
        if !tail_ok {
            return Err(Error::domain(format!("{} is not integrable at 0", self.name)));
        }
        let r = integrate_raw(
            |y| {
                let r = t * (-y).exp();
                if r <= 0.0 {
                    0.0
                } else {
                    self.eval(r) * r
                }
            },
            0.0,
            f64::INFINITY,
            Tolerance::new(1e-12, 1e-15),
        );
        if !r.converged || !r.value.is_finite() {
            return Err(Error::domain(format!("{} is not integrable at 0", self.name)));
        }
        Ok(r.value / t)
    }

    /// `F⁻¹(y)` on `(0, hint]`, by the closed inverse when supplied.
    pub fn invert(&self, y: f64, hint: f64) -> Result<f64> {
        if let Some(inv) = &self.inverse {
            return Ok(inv(y));
        }
        let below = |r: f64| {
            let v = self.eval(r);
            if self.increasing {
                v < y
            } else {
                v > y
            }
        };
        let mut lo = hint * 1e-300;
        let mut hi = hint;
        if !below(lo) || below(hi) {
            return Err(Error::domain(format!("{} does not attain {y} on (0, {hint}]", self.name)));
        }
        for _ in 0..2000 {
            let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            if mid <= lo || mid >= hi {
                break;
            }
            if below(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `F⁻¹((1/t)∫₀ᵗ F)`.
pub fn f_concave_bound(spec: &BoundSpec, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= spec.upper) {
        return Err(Error::domain(format!("level {t} outside (0, {}]", spec.upper)));
    }
    let mean = spec.mean_on(t)?;
    spec.invert(mean, t)
}

/// A cut-mass profile `r ↦ μ(K_r)`, nondecreasing from 0 to the total mass
/// over `[lo, hi]` (either end may be infinite).
#[derive(Clone)]
pub struct CutProfile {
    f: RealFn,
    pub lo: f64,
    pub hi: f64,
}

impl CutProfile {
    pub fn new<F>(f: F, lo: f64, hi: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CutProfile {
            f: Arc::new(f),
            lo,
            hi,
        }
    }

    /// Piecewise-linear profile through the samples `(rs, masses)`.
    pub fn from_samples(rs: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if rs.len() < 2 || rs.len() != masses.len() {
            return Err(Error::invalid("profile needs matching samples, at least two"));
        }
        if rs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("profile abscissae must increase"));
        }
        let (lo, hi) = (rs[0], rs[rs.len() - 1]);
        Ok(CutProfile::new(
            move |r| {
                if r <= rs[0] {
                    return masses[0];
                }
                let i = rs.partition_point(|&x| x < r);
                if i >= rs.len() {
                    return masses[masses.len() - 1];
                }
                let w = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
                masses[i - 1] + w * (masses[i] - masses[i - 1])
            },
            lo,
            hi,
        ))
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.lo {
            0.0
        } else if r >= self.hi {
            (self.f)(self.hi.min(f64::MAX))
        } else {
            (self.f)(r)
        }
    }

    fn total(&self) -> f64 {
        if self.hi.is_finite() {
            (self.f)(self.hi)
        } else {
            let mut r = 1.0f64;
            let mut last = (self.f)(r);
            for _ in 0..1100 {
                r *= 2.0;
                let v = (self.f)(r);
                if v == last {
                    break;
                }
                last = v;
            }
            last
        }
    }

    /// Finite window carrying all but a `1e-12` fraction of the mass.
    fn window(&self, t: f64) -> (f64, f64) {
        let lo = if self.lo.is_finite() {
            self.lo
        } else {
            let base = if self.hi.is_finite() { self.hi } else { 0.0 };
            let mut d = 1.0;
            while (self.f)(base - d) > 1e-12 * t && d < 1e300 {
                d *= 2.0;
            }
            base - d
        };
        let hi = if self.hi.is_finite() {
            self.hi
        } else {
            let base = lo.max(0.0);
            let mut d = 1.0;
            while (self.f)(base + d) < t * (1.0 - 1e-12) && d < 1e300 {
                d *= 2.0;
            }
            base + d
        };
        (lo, hi)
    }
}

/// Checks the F-concavity hypothesis on a cut profile and compares the cut at
/// the profile's barycenter with [`f_concave_bound`].
pub fn verify_f_concave_cut(profile: &CutProfile, spec: &BoundSpec) -> Result<CutReport> {
    let t = profile.total();
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("profile total {t} is not a positive mass")));
    }
    let (wlo, whi) = profile.window(t);
    let mut xs = Vec::with_capacity(257);
    for tau in chebyshev_levels(257) {
        xs.push(wlo + (whi - wlo) * tau);
    }
    let ps: Vec<f64> = xs.iter().map(|&r| profile.eval(r)).collect();
    if ps.windows(2).any(|w| w[1] < w[0] - 1e-12 * t) {
        return Err(Error::invalid("cut profile is not nondecreasing"));
    }

    // g = c + (1/t)[∫_c^hi (t − p) − ∫_lo^c p]
    let c = 0.5 * (wlo + whi);
    let tol = Tolerance::new(1e-12, 1e-15);
    let left = integrate_raw(|r| profile.eval(r), profile.lo, c, tol);
    let right = integrate_raw(|r| t - profile.eval(r), c, profile.hi, tol);
    if !(left.value.is_finite() && right.value.is_finite()) || left.abs_err + right.abs_err > 1e-9 * t {
        return Err(Error::numeric("profile barycenter", left.abs_err + right.abs_err));
    }
    let g = c + (right.value - left.value) / t;
    let measured = profile.eval(g);

    let (fx, fy): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(&ps)
        .filter(|(_, &p)| p > 0.0 && p <= t)
        .map(|(&x, &p)| (x, spec.eval(p)))
        .filter(|(_, y)| y.is_finite())
        .unzip();
    let shape = if spec.is_increasing() { Shape::Concave } else { Shape::Convex };
    let verdict = test_shape(&fx, &fy, shape, SHAPE_TOL);
    let affinity = affinity_score(&fx, &fy);
    let bound = f_concave_bound(spec, t)?;
    let mut report = CutReport::new(
        spec.name(),
        1,
        vec![1.0],
        g,
        t,
        measured,
        bound,
        Some(affinity),
        Oracle::quadrature("profile-quadrature", 1e-12),
    )
    .with_sides(measured, t - measured);
    if !verdict.holds {
        report.equality = false;
        report.note = Some(format!(
            "profile fails the {:?} test (worst {:.3e})",
            shape, verdict.worst_violation
        ));
    }
    Ok(report)
}
