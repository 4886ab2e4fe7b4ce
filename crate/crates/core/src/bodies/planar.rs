//! Nested quadrature for planar bodies.
//!
//! Points are written `x = t e + s f`. The outer integral runs over `t`
//! with breakpoints at the vertices, the inner one over the slice in `s`,
//! which the facet halfspaces give in closed form. Infinite slices and
//! ranges are handled by the quadrature's interval transform.

use super::geometry::{dot, Pt};
use super::{BodyDensity, WeightedBody};
use crate::error::{Error, Result};
use crate::gaussian::{norm_cdf, norm_pdf, norm_sf};
use crate::quadrature::{integrate_pieces, integrate_raw, Tolerance};

struct Frame {
    e: Pt,
    f: Pt,
    /// `t(x) = <x, tdual>`.
    tdual: Pt,
    jac: f64,
}

impl Frame {
    fn orthonormal(u: &[f64]) -> Self {
        Frame {
            e: u.to_vec(),
            f: vec![-u[1], u[0]],
            tdual: u.to_vec(),
            jac: 1.0,
        }
    }

    fn skew(u: &[f64], v: &[f64]) -> Self {
        let vu = dot(u, v);
        Frame {
            e: v.to_vec(),
            f: vec![-u[1], u[0]],
            tdual: u.iter().map(|x| x / vu).collect(),
            jac: vu,
        }
    }

    fn point(&self, t: f64, s: f64) -> Pt {
        vec![t * self.e[0] + s * self.f[0], t * self.e[1] + s * self.f[1]]
    }

    fn is_orthonormal(&self) -> bool {
        self.jac == 1.0 && dot(&self.e, &self.f) == 0.0
    }
}

fn tol_of(rel: f64) -> Tolerance {
    Tolerance {
        rel,
        abs: 1e-15,
        ..Tolerance::default()
    }
}

/// Range of `t` over the body.
fn t_range(w: &WeightedBody, fr: &Frame) -> (f64, f64) {
    let ts = w.body.vertices.iter().map(|v| dot(v, &fr.tdual));
    let (mut lo, mut hi) = ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
    for r in &w.body.rays {
        let d = dot(r, &fr.tdual);
        if d > 1e-12 {
            hi = f64::INFINITY;
        } else if d < -1e-12 {
            lo = f64::NEG_INFINITY;
        }
    }
    (lo, hi)
}

/// Slice `{s : t e + s f ∈ K}`, or `None` when empty.
fn s_interval(w: &WeightedBody, fr: &Frame, t: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let base = fr.point(t, 0.0);
    for h in &w.body.halfspaces {
        let a = dot(&h.normal, &fr.f);
        let b = h.offset - dot(&h.normal, &base);
        if a > 1e-14 {
            hi = hi.min(b / a);
        } else if a < -1e-14 {
            lo = lo.max(b / a);
        } else if b < -w.body.tol {
            return None;
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// `∫ s^k ψ(t e + s f) ds` over the slice, for `k` in `{0, 1}`.
fn inner(w: &WeightedBody, fr: &Frame, t: f64, k: i32, dens: Option<&dyn Fn(&[f64]) -> f64>, tol: f64) -> f64 {
    let Some((lo, hi)) = s_interval(w, fr, t) else {
        return 0.0;
    };
    if dens.is_none() {
        match &w.density {
            BodyDensity::Uniform => {
                return if k == 0 { hi - lo } else { 0.5 * (hi - lo) * (hi + lo) };
            }
            BodyDensity::Gaussian { mean, sigma } if fr.is_orthonormal() => {
                let (me, mf) = match mean {
                    Some(m) => (dot(m, &fr.e), dot(m, &fr.f)),
                    None => (0.0, 0.0),
                };
                let sg = *sigma;
                let outer = norm_pdf((t - me) / sg) / sg;
                let (al, be) = ((lo - mf) / sg, (hi - mf) / sg);
                let dphi = if al > 0.0 { norm_sf(al) - norm_sf(be) } else { norm_cdf(be) - norm_cdf(al) };
                return if k == 0 {
                    outer * dphi
                } else {
                    outer * (mf * dphi + sg * (norm_pdf(al) - norm_pdf(be)))
                };
            }
            _ => {}
        }
    }
    let f = |s: f64| {
        let x = fr.point(t, s);
        let v = match dens {
            Some(d) => d(&x),
            None => w.density.eval(&x),
        };
        if k == 0 {
            v
        } else {
            s * v
        }
    };
    integrate_raw(f, lo, hi, tol_of(tol)).value
}

fn breakpoints(w: &WeightedBody, fr: &Frame, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = w
        .body
        .vertices
        .iter()
        .map(|v| dot(v, &fr.tdual))
        .filter(|&t| t > lo && t < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn outer(
    w: &WeightedBody,
    fr: &Frame,
    upto: f64,
    weight_t: bool,
    k: i32,
    dens: Option<&dyn Fn(&[f64]) -> f64>,
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = t_range(w, fr);
    let hi = hi.min(upto);
    if hi <= lo {
        return Ok(0.0);
    }
    let pts = breakpoints(w, fr, lo, hi);
    let g = |t: f64| {
        let v = inner(w, fr, t, k, dens, tol);
        if weight_t {
            t * v
        } else {
            v
        }
    };
    Ok(fr.jac * integrate_pieces(g, &pts, tol_of(tol))?)
}

/// Mass of the body, or of its part `{<x, u> <= c}`.
pub(super) fn mass(w: &WeightedBody, cut: Option<(&[f64], f64)>, tol: f64) -> Result<f64> {
    let (fr, upto) = match cut {
        Some((u, c)) => (Frame::orthonormal(u), c),
        None => (Frame::orthonormal(&[1.0, 0.0]), f64::INFINITY),
    };
    outer(w, &fr, upto, false, 0, None, tol)
}

pub(super) fn barycenter(w: &WeightedBody, tol: f64) -> Result<Pt> {
    let fr = Frame::orthonormal(&[1.0, 0.0]);
    let m0 = outer(w, &fr, f64::INFINITY, false, 0, None, tol)?;
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::domain(format!("body mass {m0}")));
    }
    let mt = outer(w, &fr, f64::INFINITY, true, 0, None, tol)?;
    let ms = outer(w, &fr, f64::INFINITY, false, 1, None, tol)?;
    // f = (0, 1) for e = (1, 0)
    Ok(vec![mt / m0, ms / m0])
}

/// Density of `<X, u>` at `t`.
pub(super) fn slice_mass(w: &WeightedBody, u: &[f64], t: f64, tol: f64) -> f64 {
    inner(w, &Frame::orthonormal(u), t, 0, None, tol)
}

/// `<v,u> ∫_{-∞}^{r/<v,u>} A(t) ∫_{slice} w(z) dz dt`.
pub(super) fn skew_mass(
    w: &WeightedBody,
    u: &[f64],
    v: &[f64],
    r: f64,
    a: &dyn Fn(f64) -> f64,
    wf: &dyn Fn(&[f64]) -> f64,
    tol: f64,
) -> Result<f64> {
    let fr = Frame::skew(u, v);
    let upto = r / fr.jac;
    let (lo, hi) = t_range(w, &fr);
    let hi = hi.min(upto);
    if hi <= lo {
        return Ok(0.0);
    }
    let pts = breakpoints(w, &fr, lo, hi);
    let f0 = fr.f.clone();
    let g = |t: f64| {
        let Some((slo, shi)) = s_interval(w, &fr, t) else {
            return 0.0;
        };
        let at = a(t);
        if at == 0.0 {
            return 0.0;
        }
        let inner = integrate_raw(|s| wf(&[s * f0[0], s * f0[1]]), slo, shi, tol_of(tol)).value;
        at * inner
    };
    Ok(fr.jac * integrate_pieces(g, &pts, tol_of(tol))?)
}
