//! Worst-direction search: multi-start Nelder–Mead on hyperspherical angles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::geometry::{dot, normalized, Pt};
use super::montecarlo::SampleSet;
use super::{cut_mass, grunbaum_verify, total_mass, weighted_barycenter, EvalConfig, MeasureClass, Path, WeightedBody};
use crate::error::Result;
use crate::report::CutReport;

/// Independent local searches.
pub const MIN_STARTS: usize = 32;
/// Simplex diameter, in radians, at which a local search stops.
pub const ANGULAR_TOL: f64 = 1e-4;
const MAX_ITER: usize = 400;
const INITIAL_STEP: f64 = 0.3;
/// Samples kept for the optimizer's objective on Monte Carlo paths.
const SEARCH_SAMPLES: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct StartRecord {
    pub start: Pt,
    pub direction: Pt,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DirectionSearch {
    pub direction: Pt,
    /// Objective at the best direction as seen by the search.
    pub value: f64,
    /// Full verification at the best direction.
    pub report: CutReport,
    pub starts: Vec<StartRecord>,
    pub converged: bool,
}

fn direction(angles: &[f64]) -> Pt {
    let n = angles.len() + 1;
    let mut u = vec![0.0; n];
    let mut sin_prod = 1.0;
    for (k, &a) in angles.iter().enumerate() {
        u[k] = sin_prod * a.cos();
        sin_prod *= a.sin();
    }
    u[n - 1] = sin_prod;
    u
}

fn angles_of(u: &[f64]) -> Pt {
    let n = u.len();
    (0..n - 1)
        .map(|k| {
            if k == n - 2 {
                u[n - 1].atan2(u[n - 2])
            } else {
                let tail = u[k + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                tail.atan2(u[k])
            }
        })
        .collect()
}

/// Nelder–Mead with standard coefficients; returns (point, value, iterations, converged).
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64]) -> (Pt, f64, usize, bool) {
    let m = x0.len();
    let mut simplex: Vec<(Pt, f64)> = Vec::with_capacity(m + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..m {
        let mut x = x0.to_vec();
        x[i] += INITIAL_STEP;
        let v = f(&x);
        simplex.push((x, v));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Pt { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for it in 0..MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0.clone();
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diam < ANGULAR_TOL {
            return (best, simplex[0].1, it, true);
        }
        let mut centroid = vec![0.0; m];
        for (x, _) in &simplex[..m] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / m as f64;
            }
        }
        let worst = simplex[m].clone();
        let refl = combine(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = combine(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            simplex[m] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[m - 1].1 {
            simplex[m] = (refl, fr);
        } else {
            let (base, fb) = if fr < worst.1 { (refl.clone(), fr) } else { (worst.0.clone(), worst.1) };
            let con = combine(&centroid, &base, 0.5);
            let fc = f(&con);
            if fc < fb {
                simplex[m] = (con, fc);
            } else {
                let b = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = combine(&b, &item.0, 0.5);
                    let v = f(&x);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0.clone(), simplex[0].1, MAX_ITER, false)
}

/// Minimizes the smaller barycentric side over unit directions.
///
/// The barycenter does not depend on the direction, so it is computed once;
/// on Monte Carlo paths the objective reuses one stored sample. The best
/// direction is then verified with the full configuration.
pub fn min_cut_direction(w: &WeightedBody, class: MeasureClass, cfg: &EvalConfig) -> Result<DirectionSearch> {
    let class = class.resolve(w.dim());
    let n = w.dim();
    let objective: Box<dyn Fn(&[f64]) -> f64 + Sync> = if w.path(cfg) == Path::MonteCarlo {
        let sampler = w.sampler()?;
        let capped = EvalConfig {
            mc_samples: cfg.mc_samples.min(SEARCH_SAMPLES),
            ..*cfg
        };
        let set = SampleSet::draw(&sampler, n, &capped);
        let g = set.barycenter();
        let mass = sampler.scale() * set.total_weight / set.drawn as f64;
        let factor = if class.uses_fractions() { 1.0 } else { mass };
        Box::new(move |u: &[f64]| {
            let lo = set.fraction_below(u, dot(&g, u));
            factor * lo.min(1.0 - lo)
        })
    } else {
        let total = total_mass(w, cfg)?.value;
        let g = weighted_barycenter(w, cfg)?.point;
        let denom = if class.uses_fractions() { total } else { 1.0 };
        let wb = w.clone();
        let c = *cfg;
        Box::new(move |u: &[f64]| match cut_mass(&wb, u, dot(&g, u), &c) {
            Ok(m) => m.value.min(total - m.value) / denom,
            Err(_) => f64::INFINITY,
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0b7e_c71e);
    let starts: Vec<Pt> = (0..MIN_STARTS)
        .map(|_| {
            let g: Pt = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            angles_of(&normalized(&g).unwrap_or_else(|| direction(&vec![0.0; n - 1])))
        })
        .collect();
    let obj = &objective;
    let records: Vec<StartRecord> = starts
        .par_iter()
        .map(|a0| {
            let f = |a: &[f64]| obj(&direction(a));
            let (a, v, it, ok) = nelder_mead(&f, a0);
            StartRecord {
                start: direction(a0),
                direction: direction(&a),
                value: v,
                iterations: it,
                converged: ok,
            }
        })
        .collect();
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if r.value < records[best].value {
            best = i;
        }
    }
    let dir = records[best].direction.clone();
    let report = grunbaum_verify(w, &dir, class, cfg)?;
    let mut report = report;
    if !records[best].converged {
        report.note = Some(format!(
            "{}direction search did not converge; best found reported",
            report.note.as_deref().map(|s| format!("{s}; ")).unwrap_or_default()
        ));
    }
    Ok(DirectionSearch {
        direction: dir,
        value: records[best].value,
        report,
        converged: records[best].converged,
        starts: records,
    })
}
