//! Weighted convex bodies in dimensions 2 to 4: masses, barycenters,
//! marginals, cut masses and Grünbaum verification per measure class.
//!
//! Three evaluation paths exist. Uniform densities on polytopes are handled
//! exactly through a simplex decomposition. Planar bodies with any density
//! use nested adaptive quadrature. Everything else is Monte Carlo over 64
//! seeded streams with batch-means standard errors.

mod extremal;
pub mod geometry;
mod montecarlo;
mod optimize;
mod planar;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concavity::{affinity_score, chebyshev_levels};
use crate::error::{Error, Result};
use crate::gaussian::{ehrhard_grunbaum_bound, norm_quantile};
use crate::measure1d::Density1D;
use crate::report::{CutReport, Oracle};
use crate::sconcave::{classic_grunbaum_bound, s_grunbaum_bound};
use geometry::{
    affine_dim, axpy, clip_simplex, dot, facets, hyperplane_volume, normalized, slice_simplex, spread,
    triangulate, vertices_of, volume_centroid, Halfspace, Pt,
};

pub use extremal::{extremal_body_nd, ExtremalBodyParams, ExtremalShape};
pub use optimize::{min_cut_direction, DirectionSearch, StartRecord, ANGULAR_TOL, MIN_STARTS};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;
pub const DEFAULT_MC_SAMPLES: u64 = 10_000_000;
pub const DEFAULT_SEED: u64 = 0x6772_756e_6261_756d;
/// Independent Monte Carlo streams; also the batch count for standard errors.
pub const MC_STREAMS: usize = 64;
/// Random points used to spot-check a product decomposition.
pub const FACTORIZATION_PROBES: usize = 32;
/// Relative mass left beyond a truncation horizon.
pub const TRUNCATION_MASS: f64 = 1e-12;
/// Points on which a class profile is sampled for the equality verdict.
pub const PROFILE_POINTS: usize = 96;

/// Convex set given by vertices and recession rays.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    vertices: Vec<Pt>,
    rays: Vec<Pt>,
    dim: usize,
    affine_dim: usize,
    halfspaces: Vec<Halfspace>,
    simplices: Vec<Vec<Pt>>,
    tol: f64,
}

impl ConvexBody {
    /// `conv(vertices) + cone(rays)`, which must have nonempty interior.
    pub fn new(vertices: Vec<Pt>, rays: Vec<Pt>) -> Result<Self> {
        let dim = vertices.first().map_or(0, |v| v.len());
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::invalid(format!("body dimension {dim} outside 2..={MAX_DIM}")));
        }
        if vertices.iter().chain(&rays).any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("vertices and rays must be finite points of one dimension"));
        }
        let rays: Vec<Pt> = rays
            .iter()
            .map(|r| normalized(r).ok_or_else(|| Error::invalid("zero recession ray")))
            .collect::<Result<_>>()?;
        let reach = if spread(&vertices) > 0.0 { spread(&vertices) } else { 1.0 };
        let mut cloud = vertices.clone();
        for v in &vertices {
            for r in &rays {
                cloud.push(axpy(reach, r, v));
            }
        }
        let tol = 1e-10 * spread(&cloud).max(f64::MIN_POSITIVE);
        let affine_dim = affine_dim(&cloud, tol);
        if affine_dim < dim {
            return Err(Error::Precondition(format!(
                "body has empty interior (affine dimension {affine_dim} < {dim})"
            )));
        }
        let halfspaces: Vec<Halfspace> = facets(&cloud, tol)
            .into_iter()
            .map(|(h, _)| h)
            .filter(|h| rays.iter().all(|r| dot(&h.normal, r) <= 1e-9))
            .collect();
        let simplices = if rays.is_empty() { triangulate(&vertices, tol) } else { Vec::new() };
        Ok(ConvexBody {
            vertices,
            rays,
            dim,
            affine_dim,
            halfspaces,
            simplices,
            tol,
        })
    }

    pub fn polytope(vertices: Vec<Pt>) -> Result<Self> {
        Self::new(vertices, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn vertices(&self) -> &[Pt] {
        &self.vertices
    }

    /// Unit recession rays.
    pub fn rays(&self) -> &[Pt] {
        &self.rays
    }

    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    /// Facet halfspaces; their intersection is the body.
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Simplex decomposition (bounded bodies only).
    pub fn simplices(&self) -> &[Vec<Pt>] {
        &self.simplices
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= -self.tol)
    }

    /// Support function `h_K(u) = sup <x, u>`.
    pub fn support(&self, u: &[f64]) -> f64 {
        if self.rays.iter().any(|r| dot(r, u) > 1e-12) {
            return f64::INFINITY;
        }
        self.vertices.iter().map(|v| dot(v, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn volume(&self) -> f64 {
        if !self.is_bounded() {
            return f64::INFINITY;
        }
        volume_centroid(&self.simplices, self.dim).0
    }

    /// Intersection with extra halfspaces that bound every recession ray.
    pub fn truncated(&self, extra: &[Halfspace]) -> Result<ConvexBody> {
        if self.rays.iter().any(|r| extra.iter().all(|h| dot(&h.normal, r) <= 0.0)) {
            return Err(Error::invalid("truncation leaves a recession ray unbounded"));
        }
        let mut hs = self.halfspaces.clone();
        hs.extend_from_slice(extra);
        let verts = vertices_of(&hs, self.dim, self.tol.max(1e-12));
        ConvexBody::polytope(verts)
    }
}

fn one() -> f64 {
    1.0
}

/// Density on a body, evaluated without the indicator of the body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyDensity {
    /// Lebesgue measure.
    Uniform,
    /// `N(mean, sigma² I)`; the standard Gaussian measure by default.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Pt>,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// Radial factor of the s-concave equality case along `axis` (default `e1`);
    /// constant across each slice orthogonal to the axis.
    Extremal {
        s: f64,
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        r1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<Pt>,
    },
}

impl Default for BodyDensity {
    fn default() -> Self {
        BodyDensity::Uniform
    }
}

impl BodyDensity {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            BodyDensity::Uniform => Ok(()),
            BodyDensity::Gaussian { mean, sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid("gaussian sigma must be positive"));
                }
                if mean.as_ref().is_some_and(|m| m.len() != n) {
                    return Err(Error::invalid("gaussian mean has the wrong dimension"));
                }
                Ok(())
            }
            BodyDensity::Extremal { s, a, axis, .. } => {
                if !(*s > -1.0 && *s <= 1.0 / n as f64) {
                    return Err(Error::domain(format!("extremal s = {s} outside (-1, 1/{n}]")));
                }
                if !(*a > 0.0) {
                    return Err(Error::invalid("extremal rate a must be positive"));
                }
                if axis.as_ref().is_some_and(|x| x.len() != n || normalized(x).is_none()) {
                    return Err(Error::invalid("extremal axis must be a nonzero vector of the body dimension"));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BodyDensity::Uniform => "uniform",
            BodyDensity::Gaussian { .. } => "gaussian",
            BodyDensity::Extremal { .. } => "extremal",
        }
    }

    fn axis(&self, n: usize) -> Pt {
        match self {
            BodyDensity::Extremal { axis: Some(x), .. } => normalized(x).unwrap(),
            _ => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                e
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = x.len();
        match self {
            BodyDensity::Uniform => 1.0,
            BodyDensity::Gaussian { mean, sigma } => {
                let r2: f64 = match mean {
                    Some(m) => x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum(),
                    None => dot(x, x),
                };
                let var = sigma * sigma;
                (-0.5 * r2 / var).exp() / (2.0 * std::f64::consts::PI * var).powf(0.5 * n as f64)
            }
            BodyDensity::Extremal { s, a, r1, .. } => {
                let r = dot(x, &self.axis(n));
                extremal_radial(*s, *a, *r1, n, r)
            }
        }
    }
}

/// `A(r)` of the equality case in dimension `n`.
pub(crate) fn extremal_radial(s: f64, a: f64, r1: f64, n: usize, r: f64) -> f64 {
    if s == 0.0 {
        return (a * (r - r1)).exp();
    }
    let inv_p = 1.0 / s - n as f64;
    let lam = if s > 0.0 { 1.0 + a * (r - r1) } else { 1.0 + a * (r1 - r) };
    if lam <= 0.0 {
        return 0.0;
    }
    if inv_p == 0.0 {
        1.0
    } else {
        lam.powf(inv_p)
    }
}

/// JSON form of a weighted body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub vertices: Vec<Pt>,
    #[serde(default)]
    pub rays: Vec<Pt>,
    #[serde(default)]
    pub density: BodyDensity,
    /// Parameters of an equality-case body; when present the body is rebuilt
    /// from them and the exact sampler is attached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extremal: Option<ExtremalBodyParams>,
}

/// A convex body carrying a density.
#[derive(Debug, Clone)]
pub struct WeightedBody {
    body: ConvexBody,
    density: BodyDensity,
    law: Option<Arc<extremal::ExtremalLaw>>,
    id: String,
}

impl WeightedBody {
    pub fn new(body: ConvexBody, density: BodyDensity) -> Result<Self> {
        let n = body.dim();
        density.validate(n)?;
        if !body.is_bounded() {
            match &density {
                BodyDensity::Uniform => {
                    return Err(Error::domain("uniform density on an unbounded body has infinite mass"))
                }
                BodyDensity::Gaussian { .. } => {}
                BodyDensity::Extremal { s, .. } => {
                    let axis = density.axis(n);
                    for r in body.rays() {
                        let along = dot(r, &axis);
                        let decays = if *s >= 0.0 { along < -1e-12 } else { along.abs() > 1e-12 };
                        if !decays {
                            return Err(Error::domain(
                                "extremal density does not decay along a recession ray (infinite mass)",
                            ));
                        }
                    }
                }
            }
        }
        Ok(WeightedBody {
            body,
            density,
            law: None,
            id: String::new(),
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub(crate) fn with_law(mut self, law: extremal::ExtremalLaw) -> Self {
        self.law = Some(Arc::new(law));
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn density(&self) -> &BodyDensity {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    /// Density times the indicator of the body.
    pub fn density_at(&self, x: &[f64]) -> f64 {
        if self.body.contains(x) {
            self.density.eval(x)
        } else {
            0.0
        }
    }

    pub fn from_spec(spec: &PolytopeSpec) -> Result<Self> {
        let w = match &spec.extremal {
            Some(p) => extremal_body_nd(p)?,
            None => WeightedBody::new(ConvexBody::new(spec.vertices.clone(), spec.rays.clone())?, spec.density.clone())?,
        };
        Ok(match &spec.id {
            Some(id) => w.with_id(id.clone()),
            None => w,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(s)?)
    }

    pub fn to_spec(&self) -> PolytopeSpec {
        PolytopeSpec {
            id: (!self.id.is_empty()).then(|| self.id.clone()),
            vertices: self.body.vertices.clone(),
            rays: self.body.rays.clone(),
            density: self.density.clone(),
            extremal: self.law.as_ref().map(|l| l.params.clone()),
        }
    }

    fn path(&self, cfg: &EvalConfig) -> Path {
        if cfg.force_monte_carlo {
            Path::MonteCarlo
        } else if self.density == BodyDensity::Uniform && self.body.is_bounded() {
            Path::Simplicial
        } else if self.dim() == 2 {
            Path::Planar
        } else {
            Path::MonteCarlo
        }
    }

    fn unit(&self, u: &[f64]) -> Result<Pt> {
        if u.len() != self.dim() {
            return Err(Error::invalid(format!("direction of length {} for a body in dimension {}", u.len(), self.dim())));
        }
        normalized(u).ok_or_else(|| Error::invalid("degenerate direction (zero vector)"))
    }

    /// Body used by Monte Carlo proposals: truncated at the horizon beyond
    /// which at most [`TRUNCATION_MASS`] of the mass lies.
    fn horizon_body(&self) -> Result<ConvexBody> {
        if self.body.is_bounded() {
            return Ok(self.body.clone());
        }
        let BodyDensity::Extremal { s, a, r1, .. } = self.density else {
            return Err(Error::invalid("horizon truncation applies to extremal densities"));
        };
        let axis = self.density.axis(self.dim());
        let n = self.dim() as f64;
        let depth = if s == 0.0 {
            (-TRUNCATION_MASS.ln() + n * 8.0) / a
        } else {
            // tail mass beyond scale λ is at most λ^(1/s)
            let lam = TRUNCATION_MASS.powf(s);
            if lam > 1e4 {
                return Err(Error::Precondition(format!(
                    "heavy tail (s = {s}) needs a horizon at scale {lam:.1e}; build the body with extremal_body_nd for exact sampling"
                )));
            }
            (lam - 1.0) / a
        };
        let mut extra = vec![Halfspace {
            normal: axis.iter().map(|v| -v).collect(),
            offset: -(r1 - depth),
        }];
        if s < 0.0 {
            extra.push(Halfspace {
                normal: axis.clone(),
                offset: r1 + 1.0 / a,
            });
        }
        self.body.truncated(&extra)
    }

    fn sampler(&self) -> Result<montecarlo::Sampler> {
        if let Some(law) = &self.law {
            return Ok(montecarlo::Sampler::Extremal(law.clone()));
        }
        if let BodyDensity::Gaussian { mean, sigma } = &self.density {
            return Ok(montecarlo::Sampler::Gaussian {
                mean: mean.clone().unwrap_or_else(|| vec![0.0; self.dim()]),
                sigma: *sigma,
                halfspaces: self.body.halfspaces.clone(),
                tol: self.body.tol,
            });
        }
        montecarlo::Sampler::simplices(self.horizon_body()?, self.density.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Path {
    Simplicial,
    Planar,
    MonteCarlo,
}

impl Path {
    fn name(self) -> &'static str {
        match self {
            Path::Simplicial => "simplicial",
            Path::Planar => "planar-quadrature",
            Path::MonteCarlo => "monte-carlo",
        }
    }
}

/// Evaluation settings shared by every body operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub mc_samples: u64,
    pub seed: u64,
    /// Relative quadrature tolerance on the exact paths.
    pub quad_tol: f64,
    /// Use Monte Carlo even where an exact path exists.
    pub force_monte_carlo: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: DEFAULT_SEED,
            quad_tol: 1e-10,
            force_monte_carlo: false,
        }
    }
}

impl EvalConfig {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        EvalConfig {
            mc_samples: samples,
            seed,
            force_monte_carlo: true,
            ..Default::default()
        }
    }
}

/// A scalar with its error estimate and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub oracle: Oracle,
}

impl Estimate {
    fn exact(value: f64, path: Path, tol: f64) -> Self {
        Estimate {
            value,
            std_err: 0.0,
            oracle: Oracle::quadrature(path.name(), tol),
        }
    }
}

/// A point with componentwise error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub point: Pt,
    pub std_err: Pt,
    pub oracle: Oracle,
}

/// `μ(K)`.
pub fn total_mass(w: &WeightedBody, cfg: &EvalConfig) -> Result<Estimate> {
    let path = w.path(cfg);
    match path {
        Path::Simplicial => Ok(Estimate::exact(w.body.volume(), path, 1e-15)),
        Path::Planar => Ok(Estimate::exact(planar::mass(w, None, cfg.quad_tol)?, path, cfg.quad_tol)),
        Path::MonteCarlo => {
            let m = montecarlo::moments(&w.sampler()?, w.dim(), cfg);
            Ok(Estimate {
                value: m.mass,
                std_err: m.mass_se,
                oracle: Oracle::monte_carlo(cfg.mc_samples, m.mass_se, cfg.seed),
            })
        }
    }
}

/// `g_μ(K) = μ(K)⁻¹ ∫_K x dμ`.
pub fn weighted_barycenter(w: &WeightedBody, cfg: &EvalConfig) -> Result<PointEstimate> {
    let path = w.path(cfg);
    match path {
        Path::Simplicial => {
            let (_, g) = volume_centroid(&w.body.simplices, w.dim());
            Ok(PointEstimate {
                point: g,
                std_err: vec![0.0; w.dim()],
                oracle: Oracle::quadrature(path.name(), 1e-15),
            })
        }
        Path::Planar => Ok(PointEstimate {
            point: planar::barycenter(w, cfg.quad_tol)?,
            std_err: vec![0.0; 2],
            oracle: Oracle::quadrature(path.name(), cfg.quad_tol),
        }),
        Path::MonteCarlo => {
            let m = montecarlo::moments(&w.sampler()?, w.dim(), cfg);
            let se = m.g_se.iter().fold(0.0, |a: f64, &b| a.max(b));
            Ok(PointEstimate {
                point: m.g,
                std_err: m.g_se,
                oracle: Oracle::monte_carlo(cfg.mc_samples, se, cfg.seed),
            })
        }
    }
}

/// `μ({x ∈ K : <x, u> <= c})`.
pub fn cut_mass(w: &WeightedBody, u: &[f64], c: f64, cfg: &EvalConfig) -> Result<Estimate> {
    let u = w.unit(u)?;
    let path = w.path(cfg);
    match path {
        Path::Simplicial => Ok(Estimate::exact(simplicial_cut(&w.body, &u, c), path, 1e-15)),
        Path::Planar => Ok(Estimate::exact(planar::mass(w, Some((&u, c)), cfg.quad_tol)?, path, cfg.quad_tol)),
        Path::MonteCarlo => {
            let s = w.sampler()?;
            let (mass, mass_se) = montecarlo::cut_masses(&s, w.dim(), cfg, &u, &[c])[0];
            Ok(Estimate {
                value: mass,
                std_err: mass_se,
                oracle: Oracle::monte_carlo(cfg.mc_samples, mass_se, cfg.seed),
            })
        }
    }
}

fn simplicial_cut(body: &ConvexBody, u: &[f64], c: f64) -> f64 {
    let mut total = 0.0;
    for s in &body.simplices {
        let h: Vec<f64> = s.iter().map(|p| dot(u, p) - c).collect();
        if h.iter().all(|&x| x <= 0.0) {
            total += geometry::simplex_volume(s);
        } else if h.iter().any(|&x| x < 0.0) {
            total += volume_centroid(&triangulate(&clip_simplex(s, u, c), body.tol), body.dim).0;
        }
    }
    total
}

fn simplicial_slice(body: &ConvexBody, u: &[f64], t: f64) -> f64 {
    body.simplices
        .iter()
        .map(|s| hyperplane_volume(&slice_simplex(s, u, t), u, body.tol))
        .sum()
}

/// Law of `<X, u>` for `X ~ μ` restricted to `K`, with total mass `μ(K)`.
pub fn marginal_density(w: &WeightedBody, u: &[f64], cfg: &EvalConfig) -> Result<Density1D> {
    let u = w.unit(u)?;
    let lo = -w.body.support(&u.iter().map(|x| -x).collect::<Pt>());
    let hi = w.body.support(&u);
    let breaks: Vec<f64> = w.body.vertices.iter().map(|v| dot(v, &u)).collect();
    let center = breaks.iter().sum::<f64>() / breaks.len() as f64;
    let width = (spread(&w.body.vertices)).max(match &w.density {
        BodyDensity::Gaussian { sigma, .. } => *sigma,
        BodyDensity::Extremal { a, .. } => 1.0 / a,
        BodyDensity::Uniform => 0.0,
    });
    let width = if width > 0.0 { width } else { 1.0 };
    let label = format!("marginal of {}", if w.id.is_empty() { w.density.name() } else { &w.id });
    match w.path(cfg) {
        Path::Simplicial => {
            let body = w.body.clone();
            let uu = u.clone();
            Density1D::builder(move |t| simplicial_slice(&body, &uu, t), lo, hi)
                .breakpoints(&breaks)
                .center(center.clamp(lo, hi))
                .scale(width)
                .label(label)
                .build()
        }
        Path::Planar => {
            let wb = w.clone();
            let uu = u.clone();
            let tol = cfg.quad_tol;
            Density1D::builder(move |t| planar::slice_mass(&wb, &uu, t, tol), lo, hi)
                .breakpoints(&breaks)
                .center(center.clamp(lo, hi))
                .scale(width)
                .label(label)
                .build()
        }
        Path::MonteCarlo => montecarlo::histogram_marginal(&w.sampler()?, w.dim(), cfg, &u, label),
    }
}

/// Cut mass computed in the skew frame `x = z + t v` with `z ⊥ u`, after
/// checking that the density factorizes as `A(t) w(z)` there.
pub fn skew_slice_mass(w: &WeightedBody, u: &[f64], v: &[f64], r: f64, cfg: &EvalConfig) -> Result<Estimate> {
    let u = w.unit(u)?;
    if v.len() != w.dim() {
        return Err(Error::invalid("skew vector has the wrong dimension"));
    }
    let vu = dot(v, &u);
    if !(vu > 0.0) {
        return Err(Error::invalid("skew vector must satisfy <v, u> > 0"));
    }
    let g = weighted_barycenter(w, &EvalConfig { mc_samples: cfg.mc_samples.min(1 << 20), ..*cfg })?.point;
    let t_ref = dot(&g, &u) / vu;
    let z_ref = axpy(-t_ref, v, &g);
    let psi_ref = w.density.eval(&g);
    if !(psi_ref > 0.0) {
        return Err(Error::invalid("density vanishes at the barycenter; no reference slice"));
    }
    let factor_a = |t: f64| w.density.eval(&axpy(t, v, &z_ref));
    let factor_w = |z: &[f64]| w.density.eval(&axpy(t_ref, v, z)) / psi_ref;
    check_factorization(w, &u, v, &factor_a, &factor_w, cfg.seed)?;
    let constant_w = probe_points(w, cfg.seed ^ 0x5a5a)
        .iter()
        .map(|x| {
            let t = dot(x, &u) / vu;
            factor_w(&axpy(-t, v, x))
        })
        .all(|x| (x - 1.0).abs() <= 1e-12);
    let path = w.path(cfg);
    if path == Path::Planar || (path == Path::Simplicial && w.dim() == 2) {
        let value = planar::skew_mass(w, &u, v, r, &factor_a, &factor_w, cfg.quad_tol)?;
        return Ok(Estimate::exact(value, Path::Planar, cfg.quad_tol));
    }
    if constant_w && !cfg.force_monte_carlo {
        let body = match w.density {
            BodyDensity::Uniform => w.body.clone(),
            _ => w.horizon_body()?,
        };
        let t_lo = -body.support(&u.iter().map(|x| -x).collect::<Pt>()) / vu;
        let t_hi = (r / vu).min(body.support(&u) / vu);
        if t_hi <= t_lo {
            return Ok(Estimate::exact(0.0, Path::Simplicial, cfg.quad_tol));
        }
        let mut pts: Vec<f64> = body.vertices.iter().map(|p| dot(p, &u) / vu).filter(|&t| t > t_lo && t < t_hi).collect();
        pts.push(t_lo);
        pts.push(t_hi);
        pts.sort_by(f64::total_cmp);
        let integrand = |t: f64| factor_a(t) * simplicial_slice(&body, &u, t * vu);
        let tol = crate::quadrature::Tolerance::new(cfg.quad_tol, 1e-300);
        let value = vu * crate::quadrature::integrate_pieces(integrand, &pts, tol)?;
        return Ok(Estimate::exact(value, Path::Simplicial, cfg.quad_tol));
    }
    let s = w.sampler()?;
    let (mass, se) = montecarlo::skew_cut(&s, w.dim(), cfg, &u, v, r);
    Ok(Estimate {
        value: mass,
        std_err: se,
        oracle: Oracle::monte_carlo(cfg.mc_samples, se, cfg.seed),
    })
}

/// Points spread over the body (and along its rays) for spot checks.
fn probe_points(w: &WeightedBody, seed: u64) -> Vec<Pt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verts = &w.body.vertices;
    let reach = spread(verts).max(1.0);
    (0..FACTORIZATION_PROBES)
        .map(|_| {
            let ws: Vec<f64> = verts.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let tot: f64 = ws.iter().sum();
            let mut x = vec![0.0; w.dim()];
            for (wi, v) in ws.iter().zip(verts) {
                x = axpy(wi / tot, v, &x);
            }
            for r in &w.body.rays {
                x = axpy(rng.gen::<f64>() * reach, r, &x);
            }
            x
        })
        .collect()
}

fn check_factorization(
    w: &WeightedBody,
    u: &[f64],
    v: &[f64],
    a: &dyn Fn(f64) -> f64,
    wf: &dyn Fn(&[f64]) -> f64,
    seed: u64,
) -> Result<()> {
    let vu = dot(v, u);
    for x in probe_points(w, seed) {
        let t = dot(&x, u) / vu;
        let z = axpy(-t, v, &x);
        let direct = w.density.eval(&x);
        let product = a(t) * wf(&z);
        let scale = direct.abs().max(product.abs());
        if scale > 0.0 && (direct - product).abs() > 1e-9 * scale {
            return Err(Error::invalid(format!(
                "density does not factorize along the skew frame at {x:?} ({direct} vs {product})"
            )));
        }
    }
    Ok(())
}

/// Measure class with its sharp barycentric cut bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureClass {
    /// Uniform measure in dimension `n` (0 means the body dimension).
    Lebesgue(usize),
    /// Standard Gaussian measure; bounds refer to absolute masses.
    Gaussian,
    /// s-concave probability measure; bounds refer to mass fractions.
    SConcave(f64),
}

impl MeasureClass {
    /// Parses `lebesgue`, `lebesgue:3`, `gaussian` or `sconcave:0.5`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("lebesgue", None) => Ok(MeasureClass::Lebesgue(0)),
            ("lebesgue", Some(n)) => n
                .parse()
                .map(MeasureClass::Lebesgue)
                .map_err(|_| Error::invalid(format!("bad dimension in class {s}"))),
            ("gaussian", None) => Ok(MeasureClass::Gaussian),
            ("sconcave", Some(v)) => v
                .parse()
                .map(MeasureClass::SConcave)
                .map_err(|_| Error::invalid(format!("bad s in class {s}"))),
            _ => Err(Error::invalid(format!("unknown measure class {s}"))),
        }
    }

    fn resolve(self, n: usize) -> Self {
        match self {
            MeasureClass::Lebesgue(0) => MeasureClass::Lebesgue(n),
            c => c,
        }
    }

    pub fn name(&self) -> String {
        match self {
            MeasureClass::Lebesgue(n) => format!("lebesgue({n})"),
            MeasureClass::Gaussian => "gaussian".into(),
            MeasureClass::SConcave(s) => format!("sconcave({s})"),
        }
    }

    /// Whether `measured` is a fraction of `μ(K)` rather than an absolute mass.
    pub fn uses_fractions(&self) -> bool {
        !matches!(self, MeasureClass::Gaussian)
    }

    /// Sharp lower bound for the smaller barycentric side.
    pub fn bound(&self, total_mass: f64) -> Result<f64> {
        match *self {
            MeasureClass::Lebesgue(n) => classic_grunbaum_bound(n),
            MeasureClass::Gaussian => Ok(ehrhard_grunbaum_bound(total_mass.min(1.0))?.value()),
            MeasureClass::SConcave(s) => s_grunbaum_bound(s),
        }
    }

    /// The transform that is affine along half-space masses in the equality case.
    fn transform(&self, m: f64) -> f64 {
        match *self {
            MeasureClass::Lebesgue(n) => m.powf(1.0 / n as f64),
            MeasureClass::Gaussian => norm_quantile(m),
            MeasureClass::SConcave(s) if s == 0.0 => m.ln(),
            MeasureClass::SConcave(s) => m.powf(s),
        }
    }
}

/// Barycentric cut along `u` checked against the class bound.
///
/// `measured` is the smaller of the two sides. The equality verdict needs a
/// zero gap and an affine class profile on the smaller side, and is never
/// given on Monte Carlo rows.
pub fn grunbaum_verify(w: &WeightedBody, u: &[f64], class: MeasureClass, cfg: &EvalConfig) -> Result<CutReport> {
    let u = w.unit(u)?;
    let class = class.resolve(w.dim());
    let path = w.path(cfg);
    let (total, c, lower, upper, se) = match path {
        Path::MonteCarlo => {
            let cut = montecarlo::barycentric_cut(&w.sampler()?, w.dim(), cfg, &u);
            (cut.mass, cut.offset, cut.lower, cut.mass - cut.lower, cut.lower_se)
        }
        _ => {
            let total = total_mass(w, cfg)?.value;
            let g = weighted_barycenter(w, cfg)?.point;
            let c = dot(&g, &u);
            let lower = cut_mass(w, &u, c, cfg)?.value;
            (total, c, lower, total - lower, 0.0)
        }
    };
    let (lower, upper, se) = if class.uses_fractions() {
        (lower / total, upper / total, se)
    } else {
        (lower, upper, se * total)
    };
    let measured = lower.min(upper);
    let bound = class.bound(total)?;
    let (affinity, oracle) = match path {
        Path::MonteCarlo => (None, Oracle::monte_carlo(cfg.mc_samples, se, cfg.seed)),
        _ => (
            Some(profile_affinity(w, &u, class, lower <= upper, cfg)?),
            Oracle::quadrature(path.name(), cfg.quad_tol),
        ),
    };
    let mut report = CutReport::new(&class.name(), w.dim(), u, c, total, measured, bound, affinity, oracle)
        .with_id(&w.id)
        .with_sides(lower, upper);
    if path == Path::MonteCarlo {
        report.note = Some(format!(
            "monte-carlo: equality not asserted; gap within 3 SE: {}",
            report.within_noise(3.0)
        ));
    }
    Ok(report)
}

/// Deviation from affinity of `r ↦ F(μ(K ∩ side(r)))` over the support.
fn profile_affinity(w: &WeightedBody, u: &[f64], class: MeasureClass, lower_side: bool, cfg: &EvalConfig) -> Result<f64> {
    if w.path(cfg) == Path::Simplicial {
        // exact clipping is cheaper than tabulating the marginal
        let lo = -w.body.support(&u.iter().map(|x| -x).collect::<Pt>());
        let hi = w.body.support(u);
        let total = w.body.volume();
        let mut xs = Vec::with_capacity(PROFILE_POINTS);
        let mut ys = Vec::with_capacity(PROFILE_POINTS);
        for tau in chebyshev_levels(PROFILE_POINTS) {
            let x = lo + tau * (hi - lo);
            let below = simplicial_cut(&w.body, u, x);
            let side = if lower_side { below } else { total - below };
            if side > 0.0 && xs.last().is_none_or(|&p| x > p) {
                xs.push(x);
                ys.push(class.transform(side / total));
            }
        }
        return Ok(affinity_score(&xs, &ys));
    }
    let marginal = marginal_density(w, u, cfg)?;
    let m = marginal.total_mass();
    let mut xs = Vec::with_capacity(PROFILE_POINTS);
    let mut ys = Vec::with_capacity(PROFILE_POINTS);
    for tau in chebyshev_levels(PROFILE_POINTS) {
        let x = marginal.q(tau * m)?;
        if xs.last().is_some_and(|&p| x <= p) {
            continue;
        }
        let side = if lower_side { marginal.cdf(x)? } else { marginal.sf(x)? };
        if side <= 0.0 {
            continue;
        }
        xs.push(x);
        ys.push(class.transform(side));
    }
    Ok(affinity_score(&xs, &ys))
}

#[cfg(test)]
mod tests;
