//! Barycentric cuts of a uniform triangle and a Gaussian square, plus the worst direction.
use grunbaum_lab::bodies::{grunbaum_verify, min_cut_direction, BodyDensity, ConvexBody, EvalConfig, MeasureClass, WeightedBody};

fn main() -> grunbaum_lab::Result<()> {
    let cfg = EvalConfig::default();
    let triangle = ConvexBody::polytope(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let w = WeightedBody::new(triangle, BodyDensity::Uniform)?;
    let r = grunbaum_verify(&w, &[1.0, 0.0], MeasureClass::Lebesgue(2), &cfg)?;
    println!("triangle along e1: {:.12} vs {:.12}, equality {}", r.measured, r.bound, r.equality);
    let worst = min_cut_direction(&w, MeasureClass::Lebesgue(2), &cfg)?;
    println!("triangle worst direction {:?}: {:.12}", worst.direction, worst.value);

    let square = ConvexBody::polytope(vec![vec![-1.0, -1.0], vec![2.0, -1.0], vec![2.0, 2.0], vec![-1.0, 2.0]])?;
    let g = WeightedBody::new(square, BodyDensity::Gaussian { mean: None, sigma: 1.0 })?;
    let r = grunbaum_verify(&g, &[1.0, 0.0], MeasureClass::Gaussian, &cfg)?;
    println!(
        "gaussian square: mass {:.6}, cut {:.6} >= {:.6} (gap {:.3e})",
        r.total_mass, r.measured, r.bound, r.gap
    );
    Ok(())
}
