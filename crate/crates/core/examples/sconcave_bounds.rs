//! The s-concave constant, its p-form and the classic dimensional constants.
use grunbaum_lab::sconcave::{c_np_bound, classic_grunbaum_bound, p_from_s, s_grunbaum_bound};

fn main() -> grunbaum_lab::Result<()> {
    for s in [1.0, 0.5, 0.25, 0.0, -0.5, -0.9] {
        println!("s = {s:>5}: bound = {:.12}", s_grunbaum_bound(s)?);
    }
    for n in 1..=5 {
        let classic = classic_grunbaum_bound(n)?;
        let p = p_from_s(0.0, n)?;
        println!("n = {n}: (n/(n+1))^n = {classic:.12}, log-concave c(n, {p}) = {:.12}", c_np_bound(n, p)?);
    }
    Ok(())
}
