//! Sampled concavity, convexity and affinity tests.
//!
//! A triple `x0 < x1 < x2` is scored by the deviation of `f(x1)` from the
//! chord through `(x0, f(x0))` and `(x2, f(x2))`, divided by the local scale
//! `max |f(xi)| + |f(x2) - f(x0)|`. Concavity means every score is at least
//! `-tol`; convexity means every score is at most `tol`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default relative slack for shape tests.
pub const SHAPE_TOL: f64 = 1e-8;
/// Number of random non-adjacent triples added to the consecutive ones.
pub const RANDOM_TRIPLES: usize = 64;
const TRIPLE_SEED: u64 = 0x6772_756e_6261_756d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Concave,
    Convex,
}

/// Outcome of a shape test; `worst` is the triple with the largest violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeVerdict {
    pub holds: bool,
    /// Largest normalized violation (0 when none).
    pub worst_violation: f64,
    pub worst: Option<[(f64, f64); 3]>,
    /// Location of a sample where the function could not be evaluated.
    pub indeterminate_at: Option<f64>,
    pub points: usize,
}

impl ShapeVerdict {
    pub fn indeterminate(at: f64, points: usize) -> Self {
        ShapeVerdict {
            holds: false,
            worst_violation: f64::NAN,
            worst: None,
            indeterminate_at: Some(at),
            points,
        }
    }
}

/// Chebyshev points of the first kind mapped to `(0, 1)`, increasing.
pub fn chebyshev_levels(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
            0.5 * (1.0 - theta.cos())
        })
        .collect()
}

fn chord_score(p: [(f64, f64); 3]) -> f64 {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let w = x2 - x0;
    if w <= 0.0 {
        return 0.0;
    }
    let chord = (y0 * (x2 - x1) + y2 * (x1 - x0)) / w;
    let scale = y0.abs().max(y1.abs()).max(y2.abs()) + (y2 - y0).abs();
    if scale == 0.0 {
        return 0.0;
    }
    (y1 - chord) / scale
}

/// Tests the sampled graph `(xs, ys)` (increasing `xs`) for the given shape.
pub fn test_shape(xs: &[f64], ys: &[f64], shape: Shape, tol: f64) -> ShapeVerdict {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return ShapeVerdict::indeterminate(xs[i], n);
    }
    let sign = match shape {
        Shape::Concave => 1.0,
        Shape::Convex => -1.0,
    };
    let mut worst = 0.0;
    let mut worst_triple = None;
    let mut consider = |i: usize, j: usize, k: usize| {
        let t = [(xs[i], ys[i]), (xs[j], ys[j]), (xs[k], ys[k])];
        let v = -sign * chord_score(t);
        if v > worst {
            worst = v;
            worst_triple = Some(t);
        }
    };
    for i in 1..n.saturating_sub(1) {
        consider(i - 1, i, i + 1);
    }
    if n >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(TRIPLE_SEED);
        for _ in 0..RANDOM_TRIPLES {
            let mut idx = [
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            ];
            idx.sort_unstable();
            if idx[0] < idx[1] && idx[1] < idx[2] {
                consider(idx[0], idx[1], idx[2]);
            }
        }
    }
    ShapeVerdict {
        holds: worst <= tol,
        worst_violation: worst,
        worst: worst_triple,
        indeterminate_at: None,
        points: n,
    }
}

/// Largest deviation from the endpoint chord, relative to the endpoint rise.
///
/// Returns 0 for an exactly affine sample and `+inf` for a sample whose
/// endpoints coincide while interior values do not.
pub fn affinity_score(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return 0.0;
    }
    let (x0, y0, x1, y1) = (xs[0], ys[0], xs[n - 1], ys[n - 1]);
    let slope = (y1 - y0) / (x1 - x0);
    let dev = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - (y0 + slope * (x - x0))).abs())
        .fold(0.0, f64::max);
    let rise = (y1 - y0).abs();
    if dev == 0.0 {
        0.0
    } else if rise == 0.0 {
        f64::INFINITY
    } else {
        dev / rise
    }
}
