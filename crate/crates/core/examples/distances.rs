//! Kolmogorov, total variation and Wasserstein-1 distances between grid
//! densities.

use freestein::analytic::{self, GridDensity, MeasureSpec};
use freestein::metrics::{self, SEMICIRCLE_ABS_MEAN};

fn semicircle(radius_scale: f64) -> Result<GridDensity, analytic::AnalyticError> {
    let s = MeasureSpec::semicircle(0.0, radius_scale * radius_scale)?;
    GridDensity::from_fn(-3.0, 3.0, 4001, |x| s.density(x).unwrap_or(0.0))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = semicircle(1.0)?;
    let b = semicircle(0.7)?;
    let report = metrics::distances(&a, &b)?;
    println!("{}", report.to_json());
    println!("W1 by the monotone coupling: {:.6}", 0.3 * SEMICIRCLE_ABS_MEAN);

    let arcsine = analytic::nfold_convolve(&MeasureSpec::bernoulli(), 2, 1.0)?;
    let arc = analytic::stieltjes_density(&*arcsine, -3.0, 3.0, 4001)?;
    println!("arcsine vs semicircle: {}", metrics::distances(&arc, &a)?.to_json());

    // Four-fold sums of the two-atom law keep an atom, so total variation
    // is refused and reported as null.
    let atomic = analytic::nfold_convolve(&MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)])?, 4, 0.5)?;
    let d = analytic::recover_density(&*atomic, Some((-3.0, 3.0)), 4001)?.density;
    println!("two-atom, n = 4: {}", metrics::distances(&d, &a)?.to_json());
    Ok(())
}
