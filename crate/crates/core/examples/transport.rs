//! Transport from the Gaussian: the Lambert map, concavity tests and the transport cut bound.
use grunbaum_lab::measure1d::DensitySpec;
use grunbaum_lab::transport::{
    even_transport_gaussian_test, is_gamma_transport_concave, lambert_density, measure_from_convex_map,
    monge_ampere_residual, transport_grunbaum_verify, TransportMap,
};

fn main() -> grunbaum_lab::Result<()> {
    let map = TransportMap::lambert()?;
    let mu = measure_from_convex_map(&map)?;
    let grid: Vec<f64> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect();
    println!("lambert pushforward: mass {:.10}, residual {:.2e}", mu.total_mass(), monge_ampere_residual(&mu, &map, &grid));
    println!("lambert measure transport-concave: {}", is_gamma_transport_concave(&lambert_density()?)?.holds);

    for json in [r#"{"kind":"exponential"}"#, r#"{"kind":"gaussian","sigma":2}"#, r#"{"kind":"uniform","support":[-1,1]}"#] {
        let nu = DensitySpec::from_json(json)?.build()?;
        let (lo, hi) = nu.support();
        let even = even_transport_gaussian_test(&nu)?.accepted();
        // the cut bound needs a transport-concave measure and refuses others
        match transport_grunbaum_verify(&nu, lo, hi) {
            Ok(cut) => println!("{:<12} cut gap {:.3e}  gaussian by even map {even}", nu.label(), cut.gap),
            Err(e) => println!("{:<12} cut refused: {e}  gaussian by even map {even}", nu.label()),
        }
    }
    Ok(())
}
