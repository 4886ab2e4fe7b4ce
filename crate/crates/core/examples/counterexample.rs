//! Below s = -1 the left mass of the truncated family tends to zero, so no bound survives.
use grunbaum_lab::sconcave::verify_no_bound;

fn main() -> grunbaum_lab::Result<()> {
    let ks: Vec<u64> = (1..=6).map(|e| 10u64.pow(e)).collect();
    for p in [-0.5, -0.75] {
        let rep = verify_no_bound(p, &ks, None)?;
        println!("p = {p}: decreasing {}", rep.decreasing);
        for r in &rep.rows {
            println!("  k = {:>8}  g = {:.9}  left mass = {:.9}", r.k, r.g, r.left_mass);
        }
    }
    Ok(())
}
