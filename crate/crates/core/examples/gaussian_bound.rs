//! Gaussian cut bound against the log-concave constant t/e.
use grunbaum_lab::gaussian::{ehrhard_grunbaum_bound, quantile_cut_bound_abs};

fn main() -> grunbaum_lab::Result<()> {
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "bound", "t/e", "|quantile|<=");
    for t in [0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        let b = ehrhard_grunbaum_bound(t)?.value();
        println!("{t:>6} {b:>14.10} {:>14.10} {:>14.10}", t / std::f64::consts::E, quantile_cut_bound_abs(t)?);
    }
    Ok(())
}
