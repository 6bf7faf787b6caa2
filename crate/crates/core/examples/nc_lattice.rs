//! Non-crossing partitions: counts, Möbius values, Kreweras complements and
//! a mixed moment of free variables.

use freestein::moments::{self, FreeCumulantSequence};
use freestein::ncpart::{self, NcLattice, NcPartition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in 1..=8 {
        let count = ncpart::enumerate_nc(n)?.len();
        let mu = ncpart::mobius(&NcPartition::finest(n), &NcPartition::coarsest(n))?;
        println!(
            "n = {n}: |NC(n)| = {count:>5} (Catalan {:>5}), mu(0, 1) = {mu}",
            ncpart::catalan(n as u32)?
        );
    }

    let p = NcPartition::new(6, vec![vec![1, 3], vec![2], vec![4, 5, 6]])?;
    let k = p.kreweras()?;
    println!("\nK({p}) = {k}, K(K({p})) = {}", k.kreweras()?);
    println!("|p| + |K(p)| = {} = n + 1", p.len() + k.len());

    let lattice = NcLattice::new(4)?;
    let bottom = lattice.index_of(&NcPartition::finest(4)).expect("in NC(4)");
    let row = lattice.mobius_row(bottom);
    println!("\nmu(0, q) on NC(4):");
    for (q, v) in lattice.elements().iter().zip(&row) {
        println!("  {q:<24} {v:>3}");
    }

    // tau[a1 b1 a2 b2] for a semicircular a free from a Bernoulli b: only
    // pair partitions of the a's survive, weighted by moments of b on the
    // Kreweras complement.
    let kappa_a = FreeCumulantSequence::new(vec![0.0, 1.0, 0.0, 0.0])?;
    let m_b = moments::atomic_moments(&[(1.0, 0.5), (-1.0, 0.5)], 4)?;
    println!("\ntau[(ab)^2] = {}", moments::mixed_moment(&kappa_a, &m_b, 4)?);
    Ok(())
}
