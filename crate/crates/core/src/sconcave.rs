//! s-concave measures: Borell's exponent arithmetic, the sharp s-Grünbaum
//! constants, equality-case densities, and the family showing that no bound
//! survives for `s ≤ -1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concavity::{affinity_score, chebyshev_levels};
use crate::error::{Error, Result};
use crate::measure1d::{Density1D, TailEnvelope};
use crate::report::{CutReport, Oracle};

const PROFILE_POINTS: usize = 96;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-15 * a.abs().max(b.abs()).max(1.0)
}

/// Density exponent `p = s / (1 - n s)`; `+∞` at `s = 1/n`.
pub fn p_from_s(s: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let nf = n as f64;
    if s.is_nan() || (s > 1.0 / nf && !close(s, 1.0 / nf)) {
        return Err(Error::domain(format!("s = {s} exceeds 1/n = {}", 1.0 / nf)));
    }
    if close(s, 1.0 / nf) {
        return Ok(f64::INFINITY);
    }
    if s == f64::NEG_INFINITY {
        return Ok(-1.0 / nf);
    }
    Ok(s / (1.0 - nf * s))
}

/// Measure exponent `s = p / (1 + n p)`; `-∞` at `p = -1/n`.
pub fn s_from_p(p: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let nf = n as f64;
    if p.is_nan() || (p < -1.0 / nf && !close(p, -1.0 / nf)) {
        return Err(Error::domain(format!("p = {p} is below -1/n = {}", -1.0 / nf)));
    }
    if p == f64::INFINITY {
        return Ok(1.0 / nf);
    }
    if close(p, -1.0 / nf) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(p / (1.0 + nf * p))
}

/// The pair `(s, n)` with its density exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SConcaveSpec {
    pub s: f64,
    pub n: usize,
    /// `+∞` exactly when `s = 1/n`.
    pub p: f64,
}

impl SConcaveSpec {
    pub fn new(s: f64, n: usize) -> Result<Self> {
        let p = p_from_s(s, n)?;
        Ok(SConcaveSpec { s, n, p })
    }

    pub fn p_is_infinite(&self) -> bool {
        self.p.is_infinite()
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.s)
    }
}

/// Sign class of `s`, which selects the shape of the equality case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Positive,
    Zero,
    Negative,
}

impl Regime {
    pub fn of(s: f64) -> Self {
        if s > 0.0 {
            Regime::Positive
        } else if s == 0.0 {
            Regime::Zero
        } else {
            Regime::Negative
        }
    }
}

/// `(1/(1+s))^{1/s}`, and `1/e` at `s = 0`.
pub fn s_grunbaum_bound(s: f64) -> Result<f64> {
    if s.is_nan() || s > 1.0 {
        return Err(Error::domain(format!("s = {s} is outside (-1, 1]")));
    }
    if s <= -1.0 {
        return Err(Error::domain(format!(
            "no positive bound exists for s = {s} <= -1: s-concave probability measures \
             with s <= -1 can put arbitrarily little mass below their barycenter"
        )));
    }
    if s == 0.0 {
        return Ok((-1.0f64).exp());
    }
    Ok((-s.ln_1p() / s).exp())
}

/// `(n/(n+1))^n`.
pub fn classic_grunbaum_bound(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let nf = n as f64;
    Ok((-nf * (1.0 / nf).ln_1p()).exp())
}

/// `C(n, p) = ((np+1)/((n+1)p+1))^{(np+1)/p}`, with `C(n, 0) = 1/e` and
/// `C(n, ∞) = (n/(n+1))^n`.
pub fn c_np_bound(n: usize, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let nf = n as f64;
    if p.is_nan() || p <= -1.0 / (nf + 1.0) {
        return Err(Error::domain(format!("p = {p} must exceed -1/(n+1)")));
    }
    if p == 0.0 {
        return Ok((-1.0f64).exp());
    }
    if p == f64::INFINITY {
        return classic_grunbaum_bound(n);
    }
    let ratio = -p / ((nf + 1.0) * p + 1.0);
    Ok(((nf * p + 1.0) / p * ratio.ln_1p()).exp())
}

/// Weighted power mean `M_p^{(1/2)}(x, y)`.
pub fn p_mean_half(x: f64, y: f64, p: f64) -> f64 {
    if p == f64::INFINITY {
        return x.max(y);
    }
    if p == f64::NEG_INFINITY {
        return x.min(y);
    }
    if p == 0.0 {
        return (x * y).sqrt();
    }
    if p < 0.0 && (x == 0.0 || y == 0.0) {
        return 0.0;
    }
    (0.5 * (x.powf(p) + y.powf(p))).powf(1.0 / p)
}

/// Largest relative shortfall of `ψ((x+y)/2) ≥ M_p^{(1/2)}(ψ(x), ψ(y))` over
/// random pairs in `[lo, hi]`.
pub fn p_concavity_violation(
    psi: impl Fn(f64) -> f64,
    p: f64,
    lo: f64,
    hi: f64,
    pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = lo + (hi - lo) * rng.gen::<f64>();
        let y = lo + (hi - lo) * rng.gen::<f64>();
        let mid = psi(0.5 * (x + y));
        let mean = p_mean_half(psi(x), psi(y), p);
        let scale = mid.abs().max(mean.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((mean - mid) / scale);
    }
    worst
}

/// Parameters of an equality-case density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    pub regime: Regime,
    /// Decay rate.
    pub a: f64,
    /// Offset of the supporting face.
    pub r1: f64,
    /// Apex offset of the truncated cone (negative regime only).
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
}

impl ExtremalParams {
    /// Validates parameters for `s`; in the negative regime a missing `R`
    /// defaults to `r1 + 1/a`.
    pub fn for_s(s: f64, a: f64, r1: f64, big_r: Option<f64>) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("rate a = {a} must be positive")));
        }
        if !r1.is_finite() {
            return Err(Error::invalid("face offset r1 must be finite"));
        }
        let regime = Regime::of(s);
        let big_r = match regime {
            Regime::Negative => {
                let r = big_r.unwrap_or(r1 + 1.0 / a);
                if !(r > r1) {
                    return Err(Error::invalid(format!("apex offset R = {r} must exceed r1 = {r1}")));
                }
                Some(r)
            }
            _ => None,
        };
        Ok(ExtremalParams {
            regime,
            a,
            r1,
            big_r,
        })
    }

    /// Lower end of the support for the positive regime.
    pub fn r0(&self) -> f64 {
        self.r1 - 1.0 / self.a
    }
}

/// Marginal exponent `1/s - 1` of the equality case along the cut normal.
fn marginal_exponent(s: f64) -> f64 {
    1.0 / s - 1.0
}

/// One-dimensional equality-case density for the s-Grünbaum bound,
/// normalized to unit mass.
///
/// * `s > 0`: `(1 + a(r - r1))^{1/p}` on `[r0, r1]`, `r0 = r1 - 1/a`;
/// * `s = 0`: `e^{a(r - r1)}` on `(-∞, r1]`;
/// * `s < 0`: `(1 + a(r1 - r))^{1/p}` on `(-∞, r1]`.
pub fn extremal_density_1d(s: f64, params: &ExtremalParams) -> Result<Density1D> {
    if params.regime != Regime::of(s) {
        return Err(Error::invalid("parameter regime does not match the sign of s"));
    }
    let spec = SConcaveSpec::new(s, 1)?;
    let (a, r1) = (params.a, params.r1);
    let density = match spec.regime() {
        Regime::Positive => {
            let e = if spec.p_is_infinite() { 0.0 } else { 1.0 / spec.p };
            let r0 = params.r0();
            Density1D::builder(move |r| (1.0 + a * (r - r1)).max(0.0).powf(e), r0, r1)
                .label(format!("extremal(s={s})"))
                .normalized()
                .build()?
        }
        Regime::Zero => Density1D::builder(move |r| (a * (r - r1)).exp(), f64::NEG_INFINITY, r1)
            .center(r1)
            .scale(1.0 / a)
            .envelope(TailEnvelope::Exponential {
                coef: (a * r1.abs()).exp(),
                rate: a,
            })
            .label("extremal(s=0)")
            .normalized()
            .build()?,
        Regime::Negative => {
            if s <= -1.0 {
                return Err(Error::domain(format!(
                    "s = {s} <= -1 has no integrable equality case"
                )));
            }
            let e = 1.0 / spec.p;
            Density1D::builder(move |r| (1.0 + a * (r1 - r)).powf(e), f64::NEG_INFINITY, r1)
                .center(r1)
                .scale(1.0 / a)
                .envelope(TailEnvelope::Power {
                    // |r| / (1 + a(r1 - r)) <= 1/a + |r1| + 1 on the support
                    coef: (1.0 / a + r1.abs() + 1.0).powf(-e),
                    exponent: -e,
                })
                .label(format!("extremal(s={s})"))
                .normalized()
                .build()?
        }
    };
    let (lo, hi) = density.support();
    let (lo, hi) = (lo.max(hi - 50.0 / a), hi);
    let worst = p_concavity_violation(|r| density.eval(r), spec.p, lo, hi, 1000, 0x5c0c);
    if worst > 1e-9 {
        return Err(Error::numeric("p-concavity of extremal density", worst));
    }
    Ok(density)
}

/// Closed forms for the `s ≤ -1` family member `(1-t)^{1/p}` on `[0, 1 - 1/k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleClosedForms {
    pub mass: f64,
    pub barycenter: f64,
    pub left_mass: f64,
}

/// A normalized member of the family plus closed-form and quadrature values.
#[derive(Debug, Clone)]
pub struct CounterexampleMeasure {
    pub p: f64,
    pub k: u64,
    pub density: Density1D,
    pub closed: CounterexampleClosedForms,
    pub numeric_barycenter: f64,
    pub numeric_left_mass: f64,
}

impl CounterexampleMeasure {
    /// Largest disagreement between closed forms and quadrature.
    pub fn closed_form_delta(&self) -> f64 {
        (self.closed.barycenter - self.numeric_barycenter)
            .abs()
            .max((self.closed.left_mass - self.numeric_left_mass).abs())
    }
}

fn check_counterexample_args(p: f64, k: u64) -> Result<()> {
    if !(p > -1.0 && p <= -0.5) {
        return Err(Error::domain(format!("p = {p} must lie in (-1, -1/2]")));
    }
    if k < 2 {
        return Err(Error::domain(format!("k = {k} must be at least 2")));
    }
    Ok(())
}

/// `(1 - e^{-c L}) / c`, continuous at `c = 0`.
fn one_minus_exp_over(c: f64, l: f64) -> f64 {
    if c == 0.0 {
        l
    } else {
        -(-c * l).exp_m1() / c
    }
}

/// Mass, barycenter and left mass of the family member, in closed form.
pub fn counterexample_closed_forms(p: f64, k: u64) -> Result<CounterexampleClosedForms> {
    check_counterexample_args(p, k)?;
    let l = (k as f64).ln();
    let e1 = (p + 1.0) / p;
    let c2 = (2.0 * p + 1.0) / p;
    // 1 - (1/k)^{(p+1)/p}
    let d1 = -(-e1 * l).exp_m1();
    let mass = p / (p + 1.0) * d1;
    let barycenter = if p == -0.5 {
        1.0 - l / (k as f64 - 1.0)
    } else {
        // ((p+1)/(2p+1)) (1 - (1/k)^{c2}) = ((p+1)/p) * (1 - e^{-c2 L}) / c2
        1.0 - e1 * one_minus_exp_over(c2, l) / d1
    };
    let left_mass = if p == -0.5 {
        1.0 / l - 1.0 / (k as f64 - 1.0)
    } else {
        -(e1 * (1.0 - barycenter).ln()).exp_m1() / d1
    };
    Ok(CounterexampleClosedForms {
        mass,
        barycenter,
        left_mass,
    })
}

/// Builds the normalized family member and cross-checks its closed forms by
/// quadrature.
pub fn counterexample_measure(p: f64, k: u64) -> Result<CounterexampleMeasure> {
    let closed = counterexample_closed_forms(p, k)?;
    let kf = k as f64;
    let end = 1.0 - 1.0 / kf;
    let e = 1.0 / p;
    let mut breaks = Vec::new();
    let mut d = 2.0 / kf;
    while d < 1.0 {
        breaks.push(1.0 - d);
        d *= 2.0;
    }
    // exact distribution: quadrature in t loses relative precision where 1 - t is tiny
    let e1 = (p + 1.0) / p;
    let c = p / (p + 1.0);
    let tail_end = (1.0 / kf).powf(e1);
    let below = move |x: f64| c * (1.0 - (1.0 - x.clamp(0.0, end)).powf(e1));
    let above = move |x: f64| c * ((1.0 - x.clamp(0.0, end)).powf(e1) - tail_end);
    let density = Density1D::builder(move |t| (1.0 - t).powf(e), 0.0, end)
        .breakpoints(&breaks)
        .distribution(below, above)
        .expect_mass(closed.mass)
        .label(format!("counterexample(p={p},k={k})"))
        .normalized()
        .build()?;
    let numeric_barycenter = 1.0 - density.integrate_against(|t| 1.0 - t, 0.0, end)?;
    let numeric_left_mass = density.cdf(numeric_barycenter)?;
    Ok(CounterexampleMeasure {
        p,
        k,
        density,
        closed,
        numeric_barycenter,
        numeric_left_mass,
    })
}

/// One row of a no-bound sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoBoundRow {
    pub k: u64,
    pub g: f64,
    pub left_mass: f64,
    pub closed_form_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoBoundReport {
    pub p: f64,
    pub rows: Vec<NoBoundRow>,
    /// Left mass strictly decreasing along the schedule.
    pub decreasing: bool,
    /// Final left mass below the caller's threshold, if one was given.
    pub below_threshold: Option<bool>,
}

/// Tabulates the left mass along `ks`; the reported values are the closed
/// forms, with their quadrature disagreement alongside.
pub fn verify_no_bound(p: f64, ks: &[u64], threshold: Option<f64>) -> Result<NoBoundReport> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let m = counterexample_measure(p, k)?;
        rows.push(NoBoundRow {
            k,
            g: m.closed.barycenter,
            left_mass: m.closed.left_mass,
            closed_form_delta: m.closed_form_delta(),
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].left_mass < w[0].left_mass);
    let below_threshold = threshold.and_then(|th| rows.last().map(|r| r.left_mass < th));
    Ok(NoBoundReport {
        p,
        rows,
        decreasing,
        below_threshold,
    })
}

/// Exponent of the u-marginal of an n-dimensional equality case, `1/s - 1`.
pub fn extremal_marginal_exponent(s: f64) -> f64 {
    marginal_exponent(s)
}

/// Checks the s-bound for a one-dimensional measure cut at its barycenter.
///
/// The affinity is that of `r ↦ m(r)^s` (`ln m` at `s = 0`) on the smaller
/// side, which vanishes exactly for the equality cases.
pub fn verify_s_cut(mu: &Density1D, s: f64) -> Result<CutReport> {
    let bound = s_grunbaum_bound(s)?;
    let total = mu.total_mass();
    let g = mu.barycenter()?;
    let (lower, upper) = (mu.cdf(g)? / total, mu.sf(g)? / total);
    let lower_side = lower <= upper;
    let transform = |m: f64| if s == 0.0 { m.ln() } else { m.powf(s) };
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for tau in chebyshev_levels(PROFILE_POINTS) {
        let x = mu.q(tau * total)?;
        if xs.last().is_some_and(|&p| x <= p) {
            continue;
        }
        let side = if lower_side { mu.cdf(x)? } else { mu.sf(x)? };
        if side > 0.0 {
            xs.push(x);
            ys.push(transform(side / total));
        }
    }
    let report = CutReport::new(
        &format!("sconcave({s})"),
        1,
        vec![1.0],
        g,
        total,
        lower.min(upper),
        bound,
        Some(affinity_score(&xs, &ys)),
        Oracle::quadrature("quadrature", 1e-10),
    );
    Ok(report.with_id(mu.label()).with_sides(lower, upper))
}
