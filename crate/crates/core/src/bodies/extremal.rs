//! Equality-case bodies for the s-concave bound in dimensions 2 to 4.
//!
//! Points are `x = r v + z` with `z` in the span of `e2..en`, `v[0] = 1`,
//! and `z` uniform in a cube of half-width `h` scaled by `λ(r)`:
//! a cone for `s > 0`, a cylinder for `s = 0` and a cone truncated at `r1`
//! with apex beyond it for `s < 0`. The density is the radial factor of
//! the equality case, so `<X, e1>` has density proportional to `λ^(1/s - 1)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{axpy, Pt};
use super::{BodyDensity, ConvexBody, WeightedBody, MAX_DIM};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremalShape {
    Cone,
    Cylinder,
    TruncatedCone,
}

/// Parameters of an equality-case body; the cut normal is `e1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalBodyParams {
    pub s: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub r1: f64,
    /// Apex offset for `s < 0`; must equal `r1 + 1/a` when given.
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub big_r: Option<f64>,
    /// Half-width of the cube cross-section at `r1`.
    #[serde(default = "one")]
    pub half_width: f64,
    /// Generator direction `v`, rescaled so that `v[0] = 1`; default `e1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<Pt>,
}

impl ExtremalBodyParams {
    pub fn new(s: f64, n: usize) -> Self {
        ExtremalBodyParams {
            s,
            n,
            a: 1.0,
            r1: 0.0,
            big_r: None,
            half_width: 1.0,
            skew: None,
        }
    }

    pub fn shape(&self) -> ExtremalShape {
        if self.s > 0.0 {
            ExtremalShape::Cone
        } else if self.s == 0.0 {
            ExtremalShape::Cylinder
        } else {
            ExtremalShape::TruncatedCone
        }
    }
}

/// Exact sampler of the normalized equality-case measure.
#[derive(Debug, Clone)]
pub(crate) struct ExtremalLaw {
    pub params: ExtremalBodyParams,
    v: Pt,
    r0: f64,
    big_r: f64,
    mass: f64,
}

impl ExtremalLaw {
    pub(crate) fn mass(&self) -> f64 {
        self.mass
    }

    /// `λ = U^s` has density `∝ λ^(1/s - 1)` on `(0, 1]` for `s > 0` and on
    /// `[1, ∞)` for `s < 0`.
    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) {
        let p = &self.params;
        let u = 1.0 - rng.gen::<f64>();
        let (r, scale) = if p.s > 0.0 {
            let lam = u.powf(p.s);
            (self.r0 + lam / p.a, lam)
        } else if p.s == 0.0 {
            (p.r1 + u.ln() / p.a, 1.0)
        } else {
            let lam = u.powf(p.s);
            (self.big_r - lam * (self.big_r - p.r1), lam)
        };
        for (xi, vi) in x.iter_mut().zip(&self.v) {
            *xi = r * vi;
        }
        for xi in x.iter_mut().skip(1) {
            *xi += scale * p.half_width * (2.0 * rng.gen::<f64>() - 1.0);
        }
    }
}

/// Builds the equality-case body with its density and exact sampler.
pub fn extremal_body_nd(p: &ExtremalBodyParams) -> Result<WeightedBody> {
    let n = p.n;
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::invalid(format!("dimension {n} outside 2..={MAX_DIM}")));
    }
    if !(p.s > -1.0) {
        return Err(Error::domain(format!(
            "s = {} <= -1: no nontrivial bound exists, so there is no equality case",
            p.s
        )));
    }
    if p.s > 1.0 / n as f64 {
        return Err(Error::domain(format!("s = {} exceeds 1/n = {}", p.s, 1.0 / n as f64)));
    }
    if !(p.a > 0.0 && p.a.is_finite() && p.half_width > 0.0 && p.r1.is_finite()) {
        return Err(Error::invalid("need a > 0, half_width > 0 and finite r1"));
    }
    let big_r = p.r1 + 1.0 / p.a;
    if let Some(r) = p.big_r {
        // the slices only scale affinely with r when a (R - r1) = 1
        if ((r - p.r1) * p.a - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "R = {r} must equal r1 + 1/a = {big_r} for a p-affine marginal in dimension {n}"
            )));
        }
    }
    let v: Pt = match &p.skew {
        None => {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        }
        Some(v) => {
            if v.len() != n || !(v[0] > 0.0) || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("skew must have length n and a positive first entry"));
            }
            v.iter().map(|x| x / v[0]).collect()
        }
    };
    let h = p.half_width;
    let corners: Vec<Pt> = (0..1usize << (n - 1))
        .map(|k| {
            let mut z = vec![0.0; n];
            for j in 1..n {
                z[j] = if (k >> (j - 1)) & 1 == 1 { h } else { -h };
            }
            z
        })
        .collect();
    let r0 = p.r1 - 1.0 / p.a;
    let top: Vec<Pt> = corners.iter().map(|z| axpy(p.r1, &v, z)).collect();
    let (vertices, rays) = match p.shape() {
        ExtremalShape::Cone => {
            let mut vs = top;
            vs.push(v.iter().map(|x| r0 * x).collect());
            (vs, Vec::new())
        }
        ExtremalShape::Cylinder => (top, vec![v.iter().map(|x| -x).collect()]),
        ExtremalShape::TruncatedCone => {
            let rays = corners.iter().map(|z| axpy(-1.0, &v, &z.iter().map(|c| c / (big_r - p.r1)).collect::<Pt>())).collect();
            (top, rays)
        }
    };
    let base = (2.0 * h).powi(n as i32 - 1);
    let mass = if p.s == 0.0 { base / p.a } else { base * p.s.abs() / p.a };
    let body = ConvexBody::new(vertices, rays)?;
    let density = BodyDensity::Extremal {
        s: p.s,
        a: p.a,
        r1: p.r1,
        axis: None,
    };
    let mut params = p.clone();
    if p.s < 0.0 {
        params.big_r = Some(big_r);
    }
    let law = ExtremalLaw {
        params,
        v,
        r0,
        big_r,
        mass,
    };
    let id = format!("extremal-{}-s{}-n{}", serde_json::to_value(p.shape())?.as_str().unwrap_or(""), p.s, n);
    Ok(WeightedBody::new(body, density)?.with_law(law).with_id(id))
}
