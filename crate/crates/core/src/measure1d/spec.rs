use serde::{Deserialize, Serialize};

use super::{Density1D, TailEnvelope};
use crate::error::{Error, Result};
use crate::gaussian::norm_pdf;

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

/// One mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    #[serde(default)]
    pub mean: f64,
    #[serde(default = "one")]
    pub sigma: f64,
}

/// JSON description of a density on the line.
///
/// `support` entries may be `null` for an infinite end. Densities are
/// normalized to unit mass unless `"normalize": false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Uniform {
        support: [f64; 2],
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// `exp(-rate * r)` on the support, default `[0, ∞)`.
    Exponential {
        #[serde(default = "one")]
        rate: f64,
        #[serde(default)]
        support: Option<[Option<f64>; 2]>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        support: Option<[Option<f64>; 2]>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// `(c0 + c1 r)^exponent` on the support, where the base must stay positive.
    Power {
        coeffs: [f64; 2],
        exponent: f64,
        support: [Option<f64>; 2],
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// Log-linear interpolation of positive samples.
    Table {
        x: Vec<f64>,
        density: Vec<f64>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    GaussianMixture {
        components: Vec<MixtureComponent>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// Image of the Gaussian under `s ↦ s e^s`.
    Lambert,
    /// Equality-case density for the s-concave bound (`R` only for `s < 0`).
    Extremal {
        s: f64,
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        r1: f64,
        #[serde(default, rename = "R")]
        big_r: Option<f64>,
    },
    /// Member of the family showing that no bound holds for `s ≤ -1`.
    Counterexample { p: f64, k: u64 },
    /// Gaussian pushed forward by a transport map.
    Transported { map: crate::transport::MapSpec },
}

fn bounds(s: Option<[Option<f64>; 2]>, default: (f64, f64)) -> (f64, f64) {
    match s {
        None => default,
        Some([a, b]) => (a.unwrap_or(f64::NEG_INFINITY), b.unwrap_or(f64::INFINITY)),
    }
}

impl DensitySpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn build(&self) -> Result<Density1D> {
        match self {
            DensitySpec::Uniform { support, normalize } => {
                let [a, b] = *support;
                finish(Density1D::builder(|_| 1.0, a, b).label("uniform"), *normalize)
            }
            DensitySpec::Exponential {
                rate,
                support,
                normalize,
            } => {
                let rate = *rate;
                if !(rate > 0.0) {
                    return Err(Error::invalid("exponential rate must be positive"));
                }
                let (a, b) = bounds(*support, (0.0, f64::INFINITY));
                if a.is_infinite() {
                    return Err(Error::domain("exponential density needs a finite left end"));
                }
                // factor the left end out so large offsets do not underflow
                let bld = Density1D::builder(move |r| (-rate * (r - a)).exp(), a, b)
                    .center(a)
                    .scale(1.0 / rate)
                    .label("exponential");
                finish(bld, *normalize)
            }
            DensitySpec::Gaussian {
                mean,
                sigma,
                support,
                normalize,
            } => {
                let (m, s) = (*mean, *sigma);
                if !(s > 0.0) {
                    return Err(Error::invalid("sigma must be positive"));
                }
                let (a, b) = bounds(*support, (f64::NEG_INFINITY, f64::INFINITY));
                let center = m.clamp(a, b);
                let bld = Density1D::builder(move |r| norm_pdf((r - m) / s) / s, a, b)
                    .center(center)
                    .scale(s)
                    .envelope(TailEnvelope::Exponential {
                        coef: norm_pdf(0.0) / s * ((m / s).abs() + 0.5).exp(),
                        rate: 1.0 / s,
                    })
                    .label("gaussian");
                finish(bld, *normalize)
            }
            DensitySpec::Power {
                coeffs,
                exponent,
                support,
                normalize,
            } => {
                let [c0, c1] = *coeffs;
                let e = *exponent;
                let (a, b) = bounds(Some(*support), (0.0, 0.0));
                for end in [a, b] {
                    let base = if end.is_finite() { c0 + c1 * end } else { c1 * end.signum() };
                    if base < 0.0 {
                        return Err(Error::domain("power base negative on the support"));
                    }
                }
                let mut bld =
                    Density1D::builder(move |r| (c0 + c1 * r).max(0.0).powf(e), a, b).label("power");
                if a.is_infinite() || b.is_infinite() {
                    let c = if a.is_finite() { a } else { b };
                    bld = bld.center(c).scale((c0 + c1 * c).abs().max(1e-300) / c1.abs().max(1e-300));
                }
                finish(bld, *normalize)
            }
            DensitySpec::Table { x, density, normalize } => {
                if x.len() < 2 || x.len() != density.len() {
                    return Err(Error::invalid("table needs matching x and density, at least two"));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) || density.iter().any(|&d| !(d > 0.0)) {
                    return Err(Error::invalid("table x must increase and densities be positive"));
                }
                let xs = x.clone();
                let ls: Vec<f64> = density.iter().map(|d| d.ln()).collect();
                let (a, b) = (xs[0], xs[xs.len() - 1]);
                let bp = xs.clone();
                let f = move |r: f64| {
                    let i = xs.partition_point(|&v| v < r).clamp(1, xs.len() - 1);
                    let w = (r - xs[i - 1]) / (xs[i] - xs[i - 1]);
                    (ls[i - 1] + w * (ls[i] - ls[i - 1])).exp()
                };
                finish(Density1D::builder(f, a, b).breakpoints(&bp).label("table"), *normalize)
            }
            DensitySpec::GaussianMixture { components, normalize } => {
                if components.is_empty() || components.iter().any(|c| !(c.weight > 0.0 && c.sigma > 0.0)) {
                    return Err(Error::invalid("mixture needs positive weights and sigmas"));
                }
                let comps = components.clone();
                let wsum: f64 = comps.iter().map(|c| c.weight).sum();
                let center = comps.iter().map(|c| c.weight * c.mean).sum::<f64>() / wsum;
                let spread = comps
                    .iter()
                    .map(|c| c.sigma + (c.mean - center).abs())
                    .fold(0.0, f64::max);
                let means: Vec<f64> = comps.iter().map(|c| c.mean).collect();
                let f = move |r: f64| {
                    comps
                        .iter()
                        .map(|c| c.weight * norm_pdf((r - c.mean) / c.sigma) / c.sigma)
                        .sum()
                };
                let bld = Density1D::builder(f, f64::NEG_INFINITY, f64::INFINITY)
                    .center(center)
                    .scale(spread)
                    .breakpoints(&means)
                    .label("gaussian_mixture");
                finish(bld, *normalize)
            }
            DensitySpec::Lambert => crate::transport::lambert_density(),
            DensitySpec::Extremal { s, a, r1, big_r } => {
                let params = crate::sconcave::ExtremalParams::for_s(*s, *a, *r1, *big_r)?;
                crate::sconcave::extremal_density_1d(*s, &params)
            }
            DensitySpec::Counterexample { p, k } => {
                crate::sconcave::counterexample_measure(*p, *k).map(|c| c.density)
            }
            DensitySpec::Transported { map } => {
                let t = map.build()?;
                crate::transport::measure_from_convex_map(&t)
            }
        }
    }
}

fn finish(bld: super::DensityBuilder, normalize: bool) -> Result<Density1D> {
    if normalize {
        bld.normalized().build()
    } else {
        bld.build()
    }
}
