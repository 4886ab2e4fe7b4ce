use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::QuantileValue;
use crate::quadrature::{integrate_endpoint_singular, Tolerance};

/// Shared evaluator type for densities on the line.
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Analytic domination of the density in its infinite tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum TailEnvelope {
    /// `psi(r) <= coef * exp(-rate * |r|)`.
    Exponential { coef: f64, rate: f64 },
    /// `psi(r) <= coef * |r|^(-exponent)`, meaningful for `|r| >= 1`.
    Power { coef: f64, exponent: f64 },
}

impl TailEnvelope {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            TailEnvelope::Exponential { coef, rate } => coef * (-rate * r.abs()).exp(),
            TailEnvelope::Power { coef, exponent } => coef * r.abs().max(1.0).powf(-exponent),
        }
    }

    fn scaled(self, k: f64) -> Self {
        match self {
            TailEnvelope::Exponential { coef, rate } => TailEnvelope::Exponential { coef: coef * k, rate },
            TailEnvelope::Power { coef, exponent } => TailEnvelope::Power { coef: coef * k, exponent },
        }
    }

    /// Whether `∫ |r| psi` is finite under the envelope.
    pub fn has_first_moment(&self) -> bool {
        match *self {
            TailEnvelope::Exponential { rate, .. } => rate > 0.0,
            TailEnvelope::Power { exponent, .. } => exponent > 2.0,
        }
    }
}

const TABLE_PANELS: usize = 384;
const PANEL_TOL: Tolerance = Tolerance {
    rel: 1e-13,
    abs: 1e-300,
    max_panels: 400,
};
/// Relative accuracy demanded of the constructed mass.
pub const MASS_REL_TOL: f64 = 1e-9;

/// Cached cumulative integrals of a density over a fixed grid.
///
/// `cdf_values[i] = ∫_{lo}^{grid[i]} psi` and `tail_values[i] = ∫_{grid[i]}^{hi} psi`;
/// both are kept so that either tail is available to full relative accuracy.
#[derive(Debug, Clone)]
pub struct MeasureTable {
    pub grid: Vec<f64>,
    pub cdf_values: Vec<f64>,
    pub tail_values: Vec<f64>,
    pub accuracy: f64,
}

impl MeasureTable {
    fn build(psi: &DensityFn, lo: f64, hi: f64, nodes: Vec<f64>) -> Result<Self> {
        let m = nodes.len();
        let mut panels = Vec::with_capacity(m + 1);
        let mut err = 0.0;
        let mut push = |a: f64, b: f64| -> Result<()> {
            let r = integrate_endpoint_singular(|x| psi(x), a, b, a == lo, b == hi, PANEL_TOL);
            if !r.value.is_finite() {
                return Err(Error::numeric("density table", r.abs_err));
            }
            err += r.abs_err;
            panels.push(r.value);
            Ok(())
        };
        push(lo, nodes[0])?;
        for w in nodes.windows(2) {
            push(w[0], w[1])?;
        }
        push(nodes[m - 1], hi)?;

        let mut cdf_values = Vec::with_capacity(m);
        let mut acc = panels[0];
        cdf_values.push(acc);
        for p in &panels[1..m] {
            acc += p;
            cdf_values.push(acc);
        }
        let mut tail_values = vec![0.0; m];
        let mut acc = panels[m];
        tail_values[m - 1] = acc;
        for i in (0..m - 1).rev() {
            acc += panels[i + 1];
            tail_values[i] = acc;
        }
        Ok(MeasureTable {
            grid: nodes,
            cdf_values,
            tail_values,
            accuracy: err,
        })
    }

    /// Table from exact distribution values. Quadrature of `psi` over the
    /// panels away from the support ends must reproduce them.
    fn from_distribution(psi: &DensityFn, cdf: &DensityFn, sf: &DensityFn, lo: f64, hi: f64, nodes: Vec<f64>) -> Result<Self> {
        let cdf_values: Vec<f64> = nodes.iter().map(|&x| cdf(x)).collect();
        let tail_values: Vec<f64> = nodes.iter().map(|&x| sf(x)).collect();
        let mass = cdf(hi).max(sf(lo));
        if !cdf_values.iter().chain(&tail_values).all(|v| v.is_finite()) || !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::numeric("distribution function", f64::NAN));
        }
        if cdf_values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("distribution function decreases"));
        }
        let (mut quad, mut exact, mut err) = (0.0, 0.0, 0.0);
        let m = nodes.len();
        for i in 1..m.saturating_sub(2) {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let r = integrate_endpoint_singular(|x| psi(x), a, b, false, false, PANEL_TOL);
            quad += r.value;
            err += r.abs_err;
            exact += if cdf_values[i + 1] < 0.5 * mass {
                cdf_values[i + 1] - cdf_values[i]
            } else {
                tail_values[i] - tail_values[i + 1]
            };
        }
        if (quad - exact).abs() > MASS_REL_TOL * mass + err {
            return Err(Error::Inconsistency {
                what: "density vs distribution function".into(),
                first: exact,
                second: quad,
            });
        }
        Ok(MeasureTable {
            grid: nodes,
            cdf_values,
            tail_values,
            accuracy: 0.0,
        })
    }

    pub fn total(&self) -> f64 {
        // split at the median node so both halves are summed small-to-large
        let i = self.grid.len() / 2;
        self.cdf_values[i] + self.tail_values[i]
    }
}

/// Exact `(Φ_μ, r ↦ μ((r, β)))` supplied by the caller.
type Distribution = (DensityFn, DensityFn);

struct Inner {
    psi: DensityFn,
    dist: Option<Distribution>,
    lo: f64,
    hi: f64,
    center: f64,
    scale: f64,
    envelope: Option<TailEnvelope>,
    mass: f64,
    table: MeasureTable,
    label: String,
}

/// A density on an interval of the line with cached CDF machinery.
///
/// Cloning is cheap. The evaluator is never called outside `[lo, hi]`.
#[derive(Clone)]
pub struct Density1D {
    inner: Arc<Inner>,
}

impl fmt::Debug for Density1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density1D")
            .field("label", &self.inner.label)
            .field("support", &(self.inner.lo, self.inner.hi))
            .field("mass", &self.inner.mass)
            .finish()
    }
}

/// Builder for [`Density1D`].
pub struct DensityBuilder {
    psi: DensityFn,
    lo: f64,
    hi: f64,
    center: Option<f64>,
    scale: f64,
    breakpoints: Vec<f64>,
    envelope: Option<TailEnvelope>,
    expected_mass: Option<f64>,
    normalize: bool,
    label: String,
    dist: Option<Distribution>,
}

impl DensityBuilder {
    /// Location hint where the bulk of the mass sits.
    pub fn center(mut self, c: f64) -> Self {
        self.center = Some(c);
        self
    }

    /// Width hint for the bulk of the mass.
    pub fn scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    /// Points where the density has kinks or jumps.
    pub fn breakpoints(mut self, pts: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(pts);
        self
    }

    pub fn envelope(mut self, env: TailEnvelope) -> Self {
        self.envelope = Some(env);
        self
    }

    /// Declared mass, checked against quadrature to [`MASS_REL_TOL`].
    pub fn expect_mass(mut self, m: f64) -> Self {
        self.expected_mass = Some(m);
        self
    }

    /// Exact distribution and survival functions. They replace quadrature
    /// in the table and in `cdf`/`sf`; the density must agree with them on
    /// the interior table panels to [`MASS_REL_TOL`] of the mass.
    pub fn distribution<F, G>(mut self, cdf: F, sf: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.dist = Some((Arc::new(cdf), Arc::new(sf)));
        self
    }

    /// Rescale to unit mass after integration.
    pub fn normalized(mut self) -> Self {
        self.normalize = true;
        self
    }

    pub fn label(mut self, s: impl Into<String>) -> Self {
        self.label = s.into();
        self
    }

    pub fn build(self) -> Result<Density1D> {
        let (lo, hi) = (self.lo, self.hi);
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid(format!("empty support ({lo}, {hi})")));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid("scale hint must be positive"));
        }
        let center = self.center.unwrap_or(match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        });
        let nodes = grid_nodes(lo, hi, center, self.scale, &self.breakpoints);
        let raw = self.psi.clone();
        let guarded: DensityFn = Arc::new(move |x: f64| {
            if x < lo || x > hi {
                0.0
            } else {
                let v = raw(x);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            }
        });
        for &x in &nodes {
            let v = guarded(x);
            if v < 0.0 {
                return Err(Error::invalid(format!("negative density {v} at {x}")));
            }
        }
        let table = match &self.dist {
            None => MeasureTable::build(&guarded, lo, hi, nodes)?,
            Some((cdf, sf)) => MeasureTable::from_distribution(&guarded, cdf, sf, lo, hi, nodes)?,
        };
        let mass = table.total();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("density has mass {mass}")));
        }
        if table.accuracy > MASS_REL_TOL * mass {
            return Err(Error::numeric("density mass", table.accuracy / mass));
        }
        if let Some(m) = self.expected_mass {
            if ((mass - m) / m).abs() > MASS_REL_TOL {
                return Err(Error::Inconsistency {
                    what: "declared mass vs quadrature".into(),
                    first: m,
                    second: mass,
                });
            }
        }
        if let Some(env) = self.envelope {
            check_envelope(&guarded, &env, lo, hi, center, self.scale)?;
        }
        let table_mass = mass;
        let mut dist = self.dist;
        let (psi, table, mass) = if self.normalize {
            let inv = 1.0 / mass;
            dist = dist.map(|(c, t)| -> Distribution { (Arc::new(move |x| c(x) * inv), Arc::new(move |x| t(x) * inv)) });
            let g = guarded.clone();
            let psi: DensityFn = Arc::new(move |x| g(x) * inv);
            let table = MeasureTable {
                cdf_values: table.cdf_values.iter().map(|v| v * inv).collect(),
                tail_values: table.tail_values.iter().map(|v| v * inv).collect(),
                accuracy: table.accuracy * inv,
                grid: table.grid,
            };
            (psi, table, 1.0)
        } else {
            (guarded, table, mass)
        };
        let envelope = if self.normalize {
            let inv = 1.0 / table_mass;
            self.envelope.map(|e| e.scaled(inv))
        } else {
            self.envelope
        };
        Ok(Density1D {
            inner: Arc::new(Inner {
                psi,
                dist,
                lo,
                hi,
                center,
                scale: self.scale,
                envelope,
                mass,
                table,
                label: self.label,
            }),
        })
    }
}

fn check_envelope(
    psi: &DensityFn,
    env: &TailEnvelope,
    lo: f64,
    hi: f64,
    center: f64,
    scale: f64,
) -> Result<()> {
    for k in 0..16 {
        let d = scale * 2f64.powi(k);
        for x in [center - d, center + d] {
            if x > lo && x < hi && x.abs() >= 1.0 {
                let v = psi(x);
                if v > env.eval(x) * (1.0 + 1e-9) {
                    return Err(Error::invalid(format!(
                        "tail envelope {env:?} does not dominate the density at {x}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Table nodes: Chebyshev-clustered on finite supports, sinh-stretched on
/// infinite ones, with breakpoints merged in.
fn grid_nodes(lo: f64, hi: f64, center: f64, scale: f64, breaks: &[f64]) -> Vec<f64> {
    let n = TABLE_PANELS;
    let umax = (1e4f64).asinh();
    let mut nodes: Vec<f64> = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (0..=n)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / n as f64;
                lo + (hi - lo) * 0.5 * (1.0 - th.cos())
            })
            .collect(),
        (true, false) => {
            let c = center.max(lo);
            let mut v: Vec<f64> = (0..=n / 4)
                .map(|k| lo + (c - lo) * k as f64 / (n / 4) as f64)
                .collect();
            v.extend((1..=n).map(|k| c + scale * (umax * k as f64 / n as f64).sinh()));
            v
        }
        (false, true) => {
            let c = center.min(hi);
            let mut v: Vec<f64> = (1..=n)
                .rev()
                .map(|k| c - scale * (umax * k as f64 / n as f64).sinh())
                .collect();
            v.extend((0..=n / 4).map(|k| c + (hi - c) * k as f64 / (n / 4) as f64));
            v
        }
        (false, false) => (0..=2 * n)
            .map(|k| {
                let u = umax * (k as f64 - n as f64) / n as f64;
                center + scale * u.sinh()
            })
            .collect(),
    };
    nodes.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    nodes.retain(|x| x.is_finite());
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    nodes
}

/// Target accuracy for quantile residuals, relative to the smaller tail.
const QUANTILE_REL: f64 = 1e-13;

impl Density1D {
    pub fn builder<F>(psi: F, lo: f64, hi: f64) -> DensityBuilder
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::builder_arc(Arc::new(psi), lo, hi)
    }

    pub fn builder_arc(psi: DensityFn, lo: f64, hi: f64) -> DensityBuilder {
        DensityBuilder {
            psi,
            lo,
            hi,
            center: None,
            scale: 1.0,
            breakpoints: Vec::new(),
            envelope: None,
            expected_mass: None,
            normalize: false,
            label: String::from("density"),
            dist: None,
        }
    }

    /// Evaluates the density; zero off the support.
    pub fn eval(&self, r: f64) -> f64 {
        (self.inner.psi)(r)
    }

    pub fn evaluator(&self) -> DensityFn {
        self.inner.psi.clone()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.inner.lo, self.inner.hi)
    }

    pub fn total_mass(&self) -> f64 {
        self.inner.mass
    }

    pub fn center_hint(&self) -> f64 {
        self.inner.center
    }

    pub fn scale_hint(&self) -> f64 {
        self.inner.scale
    }

    pub fn tail_envelope(&self) -> Option<TailEnvelope> {
        self.inner.envelope
    }

    pub fn table(&self) -> &MeasureTable {
        &self.inner.table
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    /// Integral of `psi` over `[a, b]` with both ends inside one table cell
    /// or one tail.
    fn local(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let r = integrate_endpoint_singular(|x| self.eval(x), a, b, a == lo, b == hi, PANEL_TOL);
        // the table itself is only trusted to MASS_REL_TOL of the mass
        if !r.converged && r.abs_err > (1e-12 * r.value.abs()).max(MASS_REL_TOL * self.inner.mass) {
            return Err(Error::numeric("cdf panel", r.abs_err));
        }
        Ok(r.value)
    }

    /// `Φ_μ(r) = μ((α, r])`.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        if r.is_nan() {
            return Err(Error::invalid("cdf at NaN"));
        }
        let (lo, hi) = self.support();
        if r <= lo {
            return Ok(0.0);
        }
        if r >= hi {
            return Ok(self.inner.mass);
        }
        if let Some((cdf, _)) = &self.inner.dist {
            return Ok(cdf(r).clamp(0.0, self.inner.mass));
        }
        let t = &self.inner.table;
        let g = &t.grid;
        let i = g.partition_point(|&x| x <= r);
        if i == 0 {
            return self.local(lo, r);
        }
        let lower = t.cdf_values[i - 1] + self.local(g[i - 1], r)?;
        Ok(lower.min(self.inner.mass))
    }

    /// `μ((r, β))`, accurate in the upper tail.
    pub fn sf(&self, r: f64) -> Result<f64> {
        if r.is_nan() {
            return Err(Error::invalid("survival function at NaN"));
        }
        let (lo, hi) = self.support();
        if r <= lo {
            return Ok(self.inner.mass);
        }
        if r >= hi {
            return Ok(0.0);
        }
        if let Some((_, sf)) = &self.inner.dist {
            return Ok(sf(r).clamp(0.0, self.inner.mass));
        }
        let t = &self.inner.table;
        let g = &t.grid;
        let i = g.partition_point(|&x| x < r);
        if i == g.len() {
            return self.local(r, hi);
        }
        Ok((t.tail_values[i] + self.local(r, g[i])?).min(self.inner.mass))
    }

    /// `μ((a, b])`, using whichever tail keeps precision.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return Ok(0.0);
        }
        if a.is_finite() && b.is_finite() && b - a < 1e-3 * self.inner.scale {
            return self.local(a, b);
        }
        let m = self.inner.mass;
        let ca = self.cdf(a)?;
        if ca > 0.5 * m {
            Ok((self.sf(a)? - self.sf(b)?).max(0.0))
        } else {
            Ok((self.cdf(b)? - ca).max(0.0))
        }
    }

    /// `Φ_μ⁻¹(t)`; `t` at 0 or the total mass yields the support endpoint,
    /// flagged as a boundary value.
    pub fn quantile(&self, t: f64) -> Result<QuantileValue> {
        let m = self.inner.mass;
        if t.is_nan() || t < 0.0 || t > m {
            return Err(Error::invalid(format!("quantile level {t} outside [0, {m}]")));
        }
        let (lo, hi) = self.support();
        if t == 0.0 {
            return Ok(QuantileValue { value: lo, boundary: true });
        }
        if t == m {
            return Ok(QuantileValue { value: hi, boundary: true });
        }
        let value = if t <= 0.5 * m {
            self.solve_lower(t)?
        } else {
            self.solve_upper(m - t)?
        };
        Ok(QuantileValue { value, boundary: false })
    }

    /// Quantile as a plain number (endpoints for boundary levels).
    pub fn q(&self, t: f64) -> Result<f64> {
        self.quantile(t).map(|v| v.value)
    }

    /// Inverse survival function: `r` with `μ((r, β)) = tail`.
    pub fn isf(&self, tail: f64) -> Result<f64> {
        let m = self.inner.mass;
        if tail.is_nan() || tail < 0.0 || tail > m {
            return Err(Error::invalid(format!("tail level {tail} outside [0, {m}]")));
        }
        if tail == 0.0 {
            return Ok(self.inner.hi);
        }
        if tail == m {
            return Ok(self.inner.lo);
        }
        if tail <= 0.5 * m {
            self.solve_upper(tail)
        } else {
            self.solve_lower(m - tail)
        }
    }

    fn solve_lower(&self, t: f64) -> Result<f64> {
        let tab = &self.inner.table;
        let g = &tab.grid;
        let i = tab.cdf_values.partition_point(|&c| c < t);
        let (mut l, mut r) = if i == 0 {
            let hi = g[0];
            let mut step = self.inner.scale;
            let mut l = hi - step;
            while l > self.inner.lo && self.cdf(l)? >= t {
                step *= 2.0;
                l = hi - step;
                if !l.is_finite() {
                    break;
                }
            }
            (l.max(self.inner.lo), hi)
        } else if i >= g.len() {
            (g[g.len() - 1], self.inner.hi)
        } else {
            (g[i - 1], g[i])
        };
        if !r.is_finite() {
            r = self.expand_right(l, |x| Ok(self.cdf(x)? >= t))?;
        }
        if !l.is_finite() {
            l = r;
        }
        self.root(l, r, t, |x| self.cdf(x), 1.0)
    }

    fn solve_upper(&self, s: f64) -> Result<f64> {
        let tab = &self.inner.table;
        let g = &tab.grid;
        // tail_values is decreasing; find first node with tail < s
        let i = tab.tail_values.partition_point(|&c| c >= s);
        let (mut l, mut r) = if i >= g.len() {
            let lo = g[g.len() - 1];
            let mut step = self.inner.scale;
            let mut r = lo + step;
            while r < self.inner.hi && self.sf(r)? >= s {
                step *= 2.0;
                r = lo + step;
                if !r.is_finite() {
                    break;
                }
            }
            (lo, r.min(self.inner.hi))
        } else if i == 0 {
            (self.inner.lo, g[0])
        } else {
            (g[i - 1], g[i])
        };
        if !l.is_finite() {
            l = self.expand_left(r, |x| Ok(self.sf(x)? >= s))?;
        }
        if !r.is_finite() {
            r = l;
        }
        self.root(l, r, s, |x| self.sf(x), -1.0)
    }

    fn expand_right(&self, from: f64, done: impl Fn(f64) -> Result<bool>) -> Result<f64> {
        let mut step = self.inner.scale;
        for _ in 0..2000 {
            let x = from + step;
            if done(x)? {
                return Ok(x);
            }
            step *= 2.0;
        }
        Err(Error::numeric("quantile bracket", f64::INFINITY))
    }

    fn expand_left(&self, from: f64, done: impl Fn(f64) -> Result<bool>) -> Result<f64> {
        let mut step = self.inner.scale;
        for _ in 0..2000 {
            let x = from - step;
            if done(x)? {
                return Ok(x);
            }
            step *= 2.0;
        }
        Err(Error::numeric("quantile bracket", f64::INFINITY))
    }

    /// Safeguarded Newton on `h(x) = target` over the bracket `[l, r]`;
    /// `dir` is the sign of `h'` (its magnitude is the density).
    fn root(
        &self,
        mut l: f64,
        mut r: f64,
        target: f64,
        h: impl Fn(f64) -> Result<f64>,
        dir: f64,
    ) -> Result<f64> {
        let ftol = QUANTILE_REL * target;
        let mut x = 0.5 * (l + r);
        let mut best = (f64::INFINITY, x);
        for _ in 0..200 {
            let hx = h(x)?;
            let resid = hx - target;
            if resid.abs() < best.0 {
                best = (resid.abs(), x);
            }
            if resid.abs() <= ftol {
                return Ok(x);
            }
            // keep the root inside [l, r]
            if (resid < 0.0) == (dir > 0.0) {
                l = x;
            } else {
                r = x;
            }
            if r - l <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(x);
            }
            let d = dir * self.eval(x);
            let newton = if d != 0.0 { x - resid / d } else { f64::NAN };
            x = if newton > l && newton < r {
                newton
            } else {
                0.5 * (l + r)
            };
        }
        if best.0 <= 1e-10 * self.inner.mass {
            Ok(best.1)
        } else {
            Err(Error::numeric("quantile root", best.0))
        }
    }

    /// Split points for integrating against the density over `[a, b]`.
    pub(crate) fn pieces(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a];
        pts.extend(
            self.inner
                .table
                .grid
                .iter()
                .step_by(4)
                .copied()
                .filter(|&x| x > a && x < b),
        );
        pts.push(b);
        pts
    }

    /// `∫_a^b f(r) psi(r) dr`, split along the table grid.
    pub fn integrate_against(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return Ok(0.0);
        }
        let pts = self.pieces(a, b);
        let tol = Tolerance {
            rel: 1e-12,
            abs: 1e-300,
            max_panels: 400,
        };
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut err = 0.0;
        for w in pts.windows(2) {
            let r = integrate_endpoint_singular(|x| f(x) * self.eval(x), w[0], w[1], w[0] == lo, w[1] == hi, tol);
            sum += r.value;
            abs_sum += r.value.abs();
            err += r.abs_err;
        }
        if !sum.is_finite() || err > 1e-10 * abs_sum + 1e-15 {
            return Err(Error::numeric("moment integral", err));
        }
        Ok(sum)
    }
}
