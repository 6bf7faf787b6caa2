//! Non-commutative polynomials in A and R, the expansion of (AΔ)^j and the
//! squared-resolvent identity checked on random matrices.

use freestein::analytic::C64;
use freestein::ncsymb::{self, Letter, NcPolynomial};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delta = ncsymb::delta_poly();
    println!("Delta = {delta}");
    let ad = ncsymb::a_delta();
    for j in 1..=4 {
        let p = ncsymb::expand_power(&ad, j)?;
        let max_pairs = p.terms().map(|(w, _)| w.pair_count()).max().unwrap_or(0);
        println!("(A Delta)^{j}: {} words, at most {max_pairs} (A, R) pairs", p.len());
    }

    let ar = NcPolynomial::letter(Letter::A).mul(&NcPolynomial::letter(Letter::R))?;
    println!("\n(AR)^2 = {}", ncsymb::expand_power(&ar, 2)?);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let z = C64::new(2.5, 0.5);
    let (a, r) = ncsymb::random_instance(&mut rng, 6, z);
    println!(
        "\nDelta identity residual {:.2e}",
        ncsymb::delta_identity_residual(&a, &r, z)?
    );
    for q in 1..=5 {
        println!(
            "resolvent identity, q = {q}: residual {:.2e}",
            ncsymb::resolvent_lemma_check(&a, &r, z, q)?
        );
    }
    Ok(())
}
