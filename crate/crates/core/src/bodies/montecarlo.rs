//! Seeded Monte Carlo over [`MC_STREAMS`] independent ChaCha8 streams.
//!
//! Every estimate is a ratio of per-stream sums; standard errors come from
//! the spread of the per-stream estimates (batch means). Output depends
//! only on the seed and sample count, never on thread scheduling.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::extremal::ExtremalLaw;
use super::geometry::{dot, volume_centroid, Halfspace, Pt};
use super::{BodyDensity, ConvexBody, EvalConfig, MC_STREAMS};
use crate::error::{Error, Result};
use crate::measure1d::Density1D;

/// Draws weighted points whose weighted law is the body measure up to `scale`.
pub(crate) enum Sampler {
    /// Gaussian proposal, weight 1 inside the body.
    Gaussian {
        mean: Pt,
        sigma: f64,
        halfspaces: Vec<Halfspace>,
        tol: f64,
    },
    /// Uniform proposal over a simplex decomposition, weighted by the density.
    Weighted {
        simplices: Vec<Vec<Pt>>,
        cumulative: Vec<f64>,
        volume: f64,
        density: BodyDensity,
    },
    /// Exact draws from an equality-case body.
    Extremal(Arc<ExtremalLaw>),
}

impl Sampler {
    pub(crate) fn simplices(body: ConvexBody, density: BodyDensity) -> Result<Self> {
        let simplices = body.simplices().to_vec();
        let mut cumulative = Vec::with_capacity(simplices.len());
        let mut acc = 0.0;
        for s in &simplices {
            acc += volume_centroid(std::slice::from_ref(s), body.dim()).0;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::domain("body has zero volume"));
        }
        Ok(Sampler::Weighted {
            simplices,
            cumulative,
            volume: acc,
            density,
        })
    }

    /// Body mass equals `scale` times the mean weight.
    pub(crate) fn scale(&self) -> f64 {
        match self {
            Sampler::Gaussian { .. } => 1.0,
            Sampler::Weighted { volume, .. } => *volume,
            Sampler::Extremal(law) => law.mass(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) -> f64 {
        match self {
            Sampler::Gaussian {
                mean,
                sigma,
                halfspaces,
                tol,
            } => {
                for (xi, mi) in x.iter_mut().zip(mean) {
                    let z: f64 = rng.sample(StandardNormal);
                    *xi = mi + sigma * z;
                }
                if halfspaces.iter().all(|h| h.slack(x) >= -tol) {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Weighted {
                simplices,
                cumulative,
                volume,
                density,
            } => {
                let pick = rng.gen::<f64>() * volume;
                let i = cumulative.partition_point(|&c| c < pick).min(simplices.len() - 1);
                let s = &simplices[i];
                x.iter_mut().for_each(|v| *v = 0.0);
                let mut tot = 0.0;
                for p in s {
                    let e = -(1.0 - rng.gen::<f64>()).ln();
                    tot += e;
                    for (xi, pi) in x.iter_mut().zip(p) {
                        *xi += e * pi;
                    }
                }
                x.iter_mut().for_each(|v| *v /= tot);
                density.eval(x)
            }
            Sampler::Extremal(law) => {
                law.sample(rng, x);
                1.0
            }
        }
    }
}

fn stream_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i as u64);
    r
}

fn per_stream(cfg: &EvalConfig) -> u64 {
    cfg.mc_samples.div_ceil(MC_STREAMS as u64).max(1)
}

/// Runs `body` on every stream with its own generator and sample budget.
fn over_streams<T, F>(cfg: &EvalConfig, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let k = per_stream(cfg);
    (0..MC_STREAMS)
        .into_par_iter()
        .map(|i| body(&mut stream_rng(cfg.seed, i), k))
        .collect()
}

fn batch_se(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let k = v.len() as f64;
    if k < 2.0 {
        return f64::INFINITY;
    }
    let m = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

pub(crate) struct Moments {
    pub mass: f64,
    pub mass_se: f64,
    pub g: Pt,
    pub g_se: Pt,
}

struct StreamSums {
    w: f64,
    wx: Pt,
    count: u64,
}

fn stream_moments(s: &Sampler, n: usize, rng: &mut ChaCha8Rng, k: u64) -> StreamSums {
    let mut x = vec![0.0; n];
    let mut sums = StreamSums {
        w: 0.0,
        wx: vec![0.0; n],
        count: k,
    };
    for _ in 0..k {
        let w = s.draw(rng, &mut x);
        if w > 0.0 {
            sums.w += w;
            for (a, b) in sums.wx.iter_mut().zip(&x) {
                *a += w * b;
            }
        }
    }
    sums
}

fn combine(s: &Sampler, n: usize, parts: &[StreamSums]) -> Moments {
    let scale = s.scale();
    let sw: f64 = parts.iter().map(|p| p.w).sum();
    let cnt: u64 = parts.iter().map(|p| p.count).sum();
    let mut g = vec![0.0; n];
    for p in parts {
        for (gi, v) in g.iter_mut().zip(&p.wx) {
            *gi += v;
        }
    }
    g.iter_mut().for_each(|v| *v /= sw);
    let masses: Vec<f64> = parts.iter().map(|p| scale * p.w / p.count as f64).collect();
    let g_se = (0..n)
        .map(|j| batch_se(&parts.iter().map(|p| p.wx[j] / p.w).collect::<Vec<_>>()))
        .collect();
    Moments {
        mass: scale * sw / cnt as f64,
        mass_se: batch_se(&masses),
        g,
        g_se,
    }
}

pub(crate) fn moments(s: &Sampler, n: usize, cfg: &EvalConfig) -> Moments {
    let parts = over_streams(cfg, |rng, k| stream_moments(s, n, rng, k));
    combine(s, n, &parts)
}

/// Masses of `{<x,u> <= c}` for each `c`, with standard errors.
pub(crate) fn cut_masses(s: &Sampler, n: usize, cfg: &EvalConfig, u: &[f64], cs: &[f64]) -> Vec<(f64, f64)> {
    let scale = s.scale();
    let parts = over_streams(cfg, |rng, k| {
        let mut x = vec![0.0; n];
        let mut below = vec![0.0; cs.len()];
        for _ in 0..k {
            let w = s.draw(rng, &mut x);
            if w > 0.0 {
                let t = dot(&x, u);
                for (b, &c) in below.iter_mut().zip(cs) {
                    if t <= c {
                        *b += w;
                    }
                }
            }
        }
        (below, k)
    });
    let cnt: u64 = parts.iter().map(|p| p.1).sum();
    (0..cs.len())
        .map(|j| {
            let total: f64 = parts.iter().map(|p| p.0[j]).sum();
            let per: Vec<f64> = parts.iter().map(|p| scale * p.0[j] / p.1 as f64).collect();
            (scale * total / cnt as f64, batch_se(&per))
        })
        .collect()
}

/// Cut mass in the skew frame `x = z + t v`; the half-space `t <= r/<v,u>`
/// is the same set as `<x,u> <= r`, so only the bookkeeping differs.
pub(crate) fn skew_cut(s: &Sampler, n: usize, cfg: &EvalConfig, u: &[f64], v: &[f64], r: f64) -> (f64, f64) {
    let vu = dot(u, v);
    let scale = s.scale();
    let parts = over_streams(cfg, |rng, k| {
        let mut x = vec![0.0; n];
        let mut below = 0.0;
        for _ in 0..k {
            let w = s.draw(rng, &mut x);
            if w > 0.0 && dot(&x, u) / vu <= r / vu {
                below += w;
            }
        }
        (below, k)
    });
    let cnt: u64 = parts.iter().map(|p| p.1).sum();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let per: Vec<f64> = parts.iter().map(|p| scale * p.0 / p.1 as f64).collect();
    (scale * total / cnt as f64, batch_se(&per))
}

pub(crate) struct McCut {
    pub mass: f64,
    pub offset: f64,
    /// Absolute mass below the barycentric offset.
    pub lower: f64,
    /// Standard error of the lower mass fraction, including the noise of
    /// the estimated offset.
    pub lower_se: f64,
}

/// Barycenter and lower cut mass from the same draws.
///
/// Each stream is replayed: the first pass gives its barycenter, the
/// second counts mass below both the global offset and the stream's own,
/// so the batch spread reflects the offset's noise too.
pub(crate) fn barycentric_cut(s: &Sampler, n: usize, cfg: &EvalConfig, u: &[f64]) -> McCut {
    let k = per_stream(cfg);
    let parts: Vec<StreamSums> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|i| stream_moments(s, n, &mut stream_rng(cfg.seed, i), k))
        .collect();
    let m = combine(s, n, &parts);
    let c = dot(&m.g, u);
    let own: Vec<f64> = parts.iter().map(|p| dot(&p.wx, u) / p.w).collect();
    let counts: Vec<(f64, f64, f64)> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i);
            let mut x = vec![0.0; n];
            let (mut glob, mut mine, mut sw) = (0.0, 0.0, 0.0);
            for _ in 0..k {
                let w = s.draw(&mut rng, &mut x);
                if w > 0.0 {
                    let t = dot(&x, u);
                    sw += w;
                    if t <= c {
                        glob += w;
                    }
                    if t <= own[i] {
                        mine += w;
                    }
                }
            }
            (glob, mine, sw)
        })
        .collect();
    let sw: f64 = counts.iter().map(|c| c.2).sum();
    let glob: f64 = counts.iter().map(|c| c.0).sum();
    let fractions: Vec<f64> = counts.iter().map(|c| c.1 / c.2).collect();
    McCut {
        mass: m.mass,
        offset: c,
        lower: m.mass * glob / sw,
        lower_se: batch_se(&fractions),
    }
}

/// A stored weighted sample, reused across many cut evaluations.
pub(crate) struct SampleSet {
    pub n: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_weight: f64,
    pub drawn: u64,
}

impl SampleSet {
    pub(crate) fn draw(s: &Sampler, n: usize, cfg: &EvalConfig) -> Self {
        let chunks = over_streams(cfg, |rng, k| {
            let mut pts = Vec::with_capacity(k as usize * n);
            let mut ws = Vec::with_capacity(k as usize);
            let mut x = vec![0.0; n];
            for _ in 0..k {
                let w = s.draw(rng, &mut x);
                if w > 0.0 {
                    pts.extend_from_slice(&x);
                    ws.push(w);
                }
            }
            (pts, ws)
        });
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in chunks {
            points.extend(p);
            weights.extend(w);
        }
        let total_weight = weights.iter().sum();
        SampleSet {
            n,
            points,
            weights,
            total_weight,
            drawn: per_stream(cfg) * MC_STREAMS as u64,
        }
    }

    pub(crate) fn barycenter(&self) -> Pt {
        let mut g = vec![0.0; self.n];
        for (x, w) in self.points.chunks(self.n).zip(&self.weights) {
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += w * xi;
            }
        }
        g.iter_mut().for_each(|v| *v /= self.total_weight);
        g
    }

    /// Weighted fraction with `<x,u> <= c`.
    pub(crate) fn fraction_below(&self, u: &[f64], c: f64) -> f64 {
        let below: f64 = self
            .points
            .chunks(self.n)
            .zip(&self.weights)
            .filter(|(x, _)| dot(x, u) <= c)
            .map(|(_, w)| w)
            .sum();
        below / self.total_weight
    }
}

/// Histogram estimate of the marginal along `u`, linearly interpolated
/// between bin centers.
pub(crate) fn histogram_marginal(s: &Sampler, n: usize, cfg: &EvalConfig, u: &[f64], label: String) -> Result<Density1D> {
    const BINS: usize = 128;
    let capped = EvalConfig {
        mc_samples: cfg.mc_samples.min(1 << 21),
        ..*cfg
    };
    let set = SampleSet::draw(s, n, &capped);
    let proj: Vec<f64> = set.points.chunks(n).map(|x| dot(x, u)).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::domain("Monte Carlo marginal has no spread"));
    }
    let width = (hi - lo) / BINS as f64;
    let mut bins = vec![0.0; BINS];
    for (t, w) in proj.iter().zip(&set.weights) {
        let i = (((t - lo) / width) as usize).min(BINS - 1);
        bins[i] += w;
    }
    let norm = s.scale() / set.drawn as f64 / width;
    let heights: Vec<f64> = bins.iter().map(|b| b * norm).collect();
    let f = move |t: f64| {
        let pos = (t - lo) / width - 0.5;
        if pos <= 0.0 {
            return heights[0];
        }
        let i = pos.floor() as usize;
        if i + 1 >= BINS {
            return heights[BINS - 1];
        }
        let fr = pos - i as f64;
        heights[i] * (1.0 - fr) + heights[i + 1] * fr
    };
    let centers: Vec<f64> = (0..BINS).map(|i| lo + (i as f64 + 0.5) * width).collect();
    Density1D::builder(f, lo, hi).breakpoints(&centers).label(label).build()
}
