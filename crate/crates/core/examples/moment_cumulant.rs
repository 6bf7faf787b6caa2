//! Moment and free cumulant transforms, free convolution by adding
//! cumulants, and the moment matching rank against the semicircle.

use freestein::analytic::MeasureSpec;
use freestein::moments::{self, FreeCumulantSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = moments::semicircle_moments(8)?;
    let ks = moments::moments_to_cumulants(&s)?;
    println!("semicircle moments  {:?}", s.values());
    println!("semicircle cumulants {:?}", ks.values());

    let bernoulli = MeasureSpec::bernoulli().moments(8)?;
    let kb = moments::moments_to_cumulants(&bernoulli)?;
    println!("\nBernoulli cumulants {:?}", kb.values());

    // Bernoulli ⊞ Bernoulli is the arcsine law on [-2, 2], with moments C(2j, j).
    let doubled = FreeCumulantSequence::new(kb.values().iter().map(|k| 2.0 * k).collect())?;
    println!(
        "Bernoulli ⊞ Bernoulli moments {:?}",
        moments::cumulants_to_moments(&doubled)?.values()
    );

    let laws = [
        ("semicircle", MeasureSpec::standard_semicircle()),
        ("bernoulli", MeasureSpec::bernoulli()),
        ("two-atom", MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)])?),
    ];
    println!();
    for (name, law) in laws {
        let m = law.moments(8)?;
        println!("{name:>10}: matching rank {}", moments::matching_rank(&m)?);
    }

    let evolved = moments::ou_evolve(&bernoulli, 1.0)?;
    println!("\nBernoulli after unit Ornstein-Uhlenbeck time: {:?}", evolved.values());
    Ok(())
}
