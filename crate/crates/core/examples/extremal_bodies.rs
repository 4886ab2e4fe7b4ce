//! Equality cases: cone, cylinder and truncated cone, exact where possible and sampled otherwise.
use grunbaum_lab::bodies::{extremal_body_nd, grunbaum_verify, EvalConfig, ExtremalBodyParams, MeasureClass};

fn main() -> grunbaum_lab::Result<()> {
    for (s, n) in [(0.5, 2), (0.25, 2), (0.0, 2), (-0.5, 2), (0.25, 3)] {
        let w = extremal_body_nd(&ExtremalBodyParams::new(s, n))?;
        let exact = grunbaum_verify(&w, &[1.0, 0.0, 0.0][..n], MeasureClass::SConcave(s), &EvalConfig::default())?;
        let mc = grunbaum_verify(&w, &[1.0, 0.0, 0.0][..n], MeasureClass::SConcave(s), &EvalConfig::monte_carlo(1_000_000, 1))?;
        println!(
            "s = {s:>5}, n = {n}: bound {:.8}  default path {:.8} ({:?})  sampled {:.5} ± {:.1e}",
            exact.bound, exact.measured, exact.oracle.method, mc.measured, mc.oracle.tolerance
        );
    }
    Ok(())
}
