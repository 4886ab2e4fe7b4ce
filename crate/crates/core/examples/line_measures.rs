//! One-dimensional measures: cdf cut bound, quantile integral and convexity test.
use grunbaum_lab::measure1d::DensitySpec;

fn main() -> grunbaum_lab::Result<()> {
    for json in [
        r#"{"kind":"uniform","support":[0,1]}"#,
        r#"{"kind":"exponential"}"#,
        r#"{"kind":"gaussian","mean":1,"sigma":2}"#,
        r#"{"kind":"gaussian_mixture","components":[{"weight":1,"mean":-3},{"weight":1,"mean":3}]}"#,
    ] {
        let mu = DensitySpec::from_json(json)?.build()?;
        let (lo, hi) = mu.support();
        let cut = mu.verify_cdf_grunbaum(lo, hi)?;
        let qi = mu.quantile_integral(0.5 * mu.total_mass())?;
        let convex = mu.is_convex_measure()?;
        println!(
            "{:<20} cut {:.6} >= {:.6}  quantile integral {:.8}  convex {}",
            mu.label(),
            cut.measured,
            cut.bound,
            qi.direct,
            convex.holds
        );
    }
    Ok(())
}
