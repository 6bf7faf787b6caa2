//! Free convolution by subordination: Cauchy transforms, the arcsine law
//! from two Bernoulli laws, and a recovered density written as CSV.

use std::sync::Arc;

use freestein::analytic::{self, CauchyTransform, FreeSum, MeasureSpec, C64};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bernoulli = MeasureSpec::bernoulli();
    let arcsine = Arc::new(FreeSum::new(bernoulli.evaluator(), bernoulli.evaluator()));
    for z in [C64::new(0.0, 1.0), C64::new(1.0, 0.1), C64::new(3.0, 0.5)] {
        let exact = 1.0 / ((z - 2.0).sqrt() * (z + 2.0).sqrt());
        println!("G({z}) = {:.12} (closed form {exact:.12})", arcsine.cauchy(z)?);
    }

    let moments = analytic::moments_from_evaluator(&*arcsine, 6)?;
    println!("moments from contour integrals {:?}", moments.values());

    let density = analytic::stieltjes_density(&*arcsine, -2.5, 2.5, 2001)?;
    println!("recovered mass {:.6}", density.mass());
    for x in [-1.5f64, 0.0, 1.0] {
        let exact = 1.0 / (std::f64::consts::PI * (4.0 - x * x).sqrt());
        println!("f({x}) = {:.6} (closed form {exact:.6})", density.interpolate(x));
    }

    let nu = analytic::nfold_convolve(&MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)])?, 64, 0.125)?;
    let recovered = analytic::recover_density(&*nu, None, 2001)?;
    let path = std::env::temp_dir().join("two_atom_64.csv");
    recovered.density.save(&path)?;
    println!(
        "64-fold two-atom law on [{:.3}, {:.3}], {} subordination iterations, written to {}",
        recovered.density.lo(),
        recovered.density.hi(),
        recovered.iterations,
        path.display()
    );
    Ok(())
}
