//! One-dimensional measures: CDF and quantile machinery, truncated moments,
//! the CDF form of the Grünbaum bound, and the generic F-concave bound.

mod density;
mod fconcave;
mod spec;

pub use density::{Density1D, DensityBuilder, DensityFn, MeasureTable, TailEnvelope, MASS_REL_TOL};
pub use fconcave::{f_concave_bound, verify_f_concave_cut, BoundSpec, CutProfile};
pub use spec::DensitySpec;

use serde::{Deserialize, Serialize};

use crate::concavity::{affinity_score, chebyshev_levels, test_shape, Shape, ShapeVerdict, SHAPE_TOL};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_raw, Tolerance};
use crate::report::{CutReport, Oracle};

/// Sample count for shape tests on a measure.
pub const SHAPE_POINTS: usize = 512;
/// Allowed disagreement between the two quantile-integral methods.
pub const QUANTILE_INTEGRAL_AGREE: f64 = 1e-7;
/// Disagreement that is treated as an error.
pub const QUANTILE_INTEGRAL_FAIL: f64 = 1e-6;
/// Slack on the CDF-Grünbaum inequality.
pub const CDF_GRUNBAUM_SLACK: f64 = 1e-8;

/// `∫₀ᵗ Φ_μ⁻¹` by two routes, plus the closed expression `g − Φ_μ⁻¹(t)(1 − t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantileIntegral {
    pub t: f64,
    /// Quadrature of the quantile function; authoritative.
    pub direct: f64,
    /// `∫_{α}^{Φ_μ⁻¹(t)} s dμ(s)`.
    pub truncated_moment: f64,
    /// `g_μ − Φ_μ⁻¹(t)(1 − t)`, reported only.
    pub printed_formula: f64,
}

impl QuantileIntegral {
    pub fn methods_delta(&self) -> f64 {
        (self.direct - self.truncated_moment).abs()
    }

    pub fn printed_delta(&self) -> f64 {
        self.printed_formula - self.direct
    }
}

/// A sampled map together with a shape verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledProfile {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub verdict: ShapeVerdict,
    pub affinity: f64,
}

const QI_TOL: Tolerance = Tolerance {
    rel: 1e-11,
    abs: 1e-14,
    max_panels: 2000,
};

impl Density1D {
    fn require_level(&self, t: f64, allow_full: bool) -> Result<()> {
        let m = self.total_mass();
        let ok = t > 0.0 && (t < m || (allow_full && t <= m * (1.0 + 1e-15)));
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("level {t} outside (0, {m})")))
        }
    }

    /// Barycenter of the restriction to `(a, b)`.
    pub fn truncated_barycenter(&self, a: f64, b: f64) -> Result<f64> {
        let mass = self.interval_mass(a, b)?;
        if mass <= 0.0 {
            return Err(Error::domain(format!("zero mass on ({a}, {b})")));
        }
        self.check_first_moment(a, b)?;
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        // center the moment on a finite anchor to avoid cancellation
        let anchor = if a.is_finite() {
            if b.is_finite() {
                0.5 * (a + b)
            } else {
                a
            }
        } else if b.is_finite() {
            b
        } else {
            self.center_hint()
        };
        let m1 = self.integrate_against(|r| r - anchor, a, b)?;
        let mass_q = self.integrate_against(|_| 1.0, a, b)?;
        Ok(anchor + m1 / mass_q)
    }

    fn check_first_moment(&self, a: f64, b: f64) -> Result<()> {
        let (lo, hi) = self.support();
        let unbounded = (a <= lo && lo.is_infinite()) || (b >= hi && hi.is_infinite());
        if let (true, Some(env)) = (unbounded, self.tail_envelope()) {
            if !env.has_first_moment() {
                return Err(Error::domain("tail envelope admits no first moment"));
            }
        }
        Ok(())
    }

    /// Barycenter of the whole measure.
    pub fn barycenter(&self) -> Result<f64> {
        let (lo, hi) = self.support();
        self.truncated_barycenter(lo, hi)
    }

    /// `∫₀ᵗ Φ_μ⁻¹(r) dr` by direct quadrature of the quantile, cross-checked
    /// against the truncated first moment.
    pub fn quantile_integral(&self, t: f64) -> Result<QuantileIntegral> {
        self.require_level(t, true)?;
        let m = self.total_mass();
        let t = t.min(m);
        let direct = self.quantile_integral_direct(t)?;
        let (lo, _) = self.support();
        let qt = self.q(t)?;
        let truncated_moment = self.integrate_against(|r| r, lo, qt)?;
        let g = self.barycenter()?;
        // 0 * inf taken as 0 at t = 1
        let printed_formula = if (1.0 - t) == 0.0 { g } else { g - qt * (1.0 - t) };
        let out = QuantileIntegral {
            t,
            direct,
            truncated_moment,
            printed_formula,
        };
        let scale = 1.0f64.max(direct.abs());
        if out.methods_delta() > QUANTILE_INTEGRAL_FAIL * scale {
            return Err(Error::Inconsistency {
                what: format!("quantile integral at t = {t}"),
                first: direct,
                second: truncated_moment,
            });
        }
        Ok(out)
    }

    fn quantile_integral_direct(&self, t: f64) -> Result<f64> {
        let m = self.total_mass();
        let half = 0.5 * t;
        let q = |r: f64| self.q(r).unwrap_or(f64::NAN);
        // r = half * e^{-y} flattens the singularity at 0
        let left = integrate_raw(
            |y| {
                let r = half * (-y).exp();
                if r <= 0.0 {
                    0.0
                } else {
                    q(r) * r
                }
            },
            0.0,
            f64::INFINITY,
            QI_TOL,
        );
        let right = if t >= m {
            // tail mass d = half * e^{-y}; the upper quantile is read from the
            // survival side so that d below one ulp of t still resolves
            integrate_raw(
                |y| {
                    let d = half * (-y).exp();
                    if d <= 0.0 {
                        0.0
                    } else {
                        self.isf(d).unwrap_or(f64::NAN) * d
                    }
                },
                0.0,
                f64::INFINITY,
                QI_TOL,
            )
        } else {
            integrate_raw(q, half, t, QI_TOL)
        };
        let v = left.value + right.value;
        if !v.is_finite() {
            return Err(Error::numeric("quantile integral", f64::INFINITY));
        }
        let err = left.abs_err + right.abs_err;
        if err > 1e-9 * (1.0 + v.abs()) {
            return Err(Error::numeric("quantile integral", err));
        }
        Ok(v)
    }

    /// `Φ_μ((1/t)∫₀ᵗ Φ_μ⁻¹)` with `t = μ((a, b))`.
    pub fn cdf_grunbaum_bound(&self, a: f64, b: f64) -> Result<f64> {
        let t = self.interval_mass(a, b)?;
        if t <= 0.0 {
            return Err(Error::domain(format!("zero mass on ({a}, {b})")));
        }
        let qi = self.quantile_integral(t)?;
        self.cdf(qi.direct / t)
    }

    /// Checks `μ((a, g]) ≥ Φ_μ((1/t)∫₀ᵗ Φ_μ⁻¹)` with `g` the barycenter of the
    /// restriction to `(a, b)`.
    pub fn verify_cdf_grunbaum(&self, a: f64, b: f64) -> Result<CutReport> {
        let t = self.interval_mass(a, b)?;
        let bound = self.cdf_grunbaum_bound(a, b)?;
        let g = self.truncated_barycenter(a, b)?;
        let measured = self.interval_mass(a, g)?;
        let upper = self.interval_mass(g, b)?;
        let profile = self.halfspace_concavity_profile(a)?;
        let (xs, ys) = restrict(&profile.xs, &profile.ys, a, b);
        let affinity = affinity_score(&xs, &ys);
        Ok(
            CutReport::new("cdf", 1, vec![1.0], g, t, measured, bound, Some(affinity), Oracle::quadrature("quadrature", 1e-10))
                .with_id(self.label())
                .with_sides(measured, upper),
        )
    }

    /// Interior quantile points at Chebyshev levels.
    fn level_points(&self, n: usize) -> Result<Vec<f64>> {
        let m = self.total_mass();
        let mut xs = Vec::with_capacity(n);
        for tau in chebyshev_levels(n) {
            xs.push(self.q(tau * m)?);
        }
        xs.dedup();
        Ok(xs)
    }

    /// Tests convexity of `1/ψ` on [`SHAPE_POINTS`] interior points.
    pub fn is_convex_measure(&self) -> Result<ShapeVerdict> {
        let xs = self.level_points(SHAPE_POINTS)?;
        let mut ys = Vec::with_capacity(xs.len());
        for &x in &xs {
            let v = self.eval(x);
            if v <= 0.0 {
                return Ok(ShapeVerdict::indeterminate(x, xs.len()));
            }
            ys.push(1.0 / v);
        }
        Ok(test_shape(&xs, &ys, Shape::Convex, SHAPE_TOL))
    }

    /// Samples `r ↦ Φ_μ⁻¹(Φ_μ(r) − Φ_μ(a))` for `r > a` and tests concavity.
    pub fn halfspace_concavity_profile(&self, a: f64) -> Result<SampledProfile> {
        let (lo, hi) = self.support();
        if a >= hi {
            return Err(Error::domain(format!("cut point {a} beyond the support")));
        }
        let m = self.total_mass();
        let fa = if a <= lo { 0.0 } else { self.cdf(a)? };
        let mut xs = Vec::with_capacity(SHAPE_POINTS);
        let mut ys = Vec::with_capacity(SHAPE_POINTS);
        for tau in chebyshev_levels(SHAPE_POINTS) {
            let r = self.q(fa + tau * (m - fa))?;
            if r <= a || xs.last().is_some_and(|&p| r <= p) {
                continue;
            }
            let level = self.interval_mass(a, r)?;
            if level <= 0.0 || level >= m {
                continue;
            }
            xs.push(r);
            ys.push(self.q(level)?);
        }
        let verdict = test_shape(&xs, &ys, Shape::Concave, SHAPE_TOL);
        let affinity = affinity_score(&xs, &ys);
        Ok(SampledProfile {
            xs,
            ys,
            verdict,
            affinity,
        })
    }

    /// `I_μ(t) = ψ(Φ_μ⁻¹(t))`.
    pub fn iso_profile(&self, t: f64) -> Result<f64> {
        self.require_level(t, false)?;
        Ok(self.eval(self.q(t)?))
    }
}

fn restrict(xs: &[f64], ys: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    xs.iter()
        .zip(ys)
        .filter(|(&x, _)| x > a && x < b)
        .map(|(&x, &y)| (x, y))
        .unzip()
}
