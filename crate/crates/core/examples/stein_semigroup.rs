//! The free Stein operator, the Ornstein-Uhlenbeck semigroup and the dual
//! Stein pairing.

use freestein::analytic::MeasureSpec;
use freestein::metrics;
use freestein::moments;
use freestein::stein;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // L[g](x, y) = -x g(x) + (g(y) - g(x))/(y - x)
    println!("L[x^2](1, 3) = {}", stein::stein_operator_eval(|x| x * x, 1.0, 3.0));

    for (name, mu) in stein::test_battery() {
        let m = mu.moments(8)?;
        let d = stein::stein_discrepancy(&m);
        println!("\n{name}: Stein discrepancy max |d_r| = {:.3e}", d.max_abs());
        for p in [2, 4, 6] {
            let exact = stein::generator_apply(&m, p)?;
            let fd = stein::generator_finite_difference(&mu, p, 1e-5)?;
            println!("  generator on x^{p}: {exact:+.6} (finite difference {fd:+.6})");
        }
        let h = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.5];
        let pairing = stein::dual_stein_pairing(&mu, &h, 40.0, 200)?;
        let target = stein::dual_stein_target(&mu, &h)?;
        println!(
            "  dual pairing for x^3 + x^6/2: {:+.12} vs {target:+.12}",
            pairing.value
        );
    }

    let skew = MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)])?;
    println!();
    for theta in [0.5, 1.0, 2.0, 4.0] {
        let third = moments::ou_evolve(&skew.moments(3)?, theta)?.get(3);
        let check = metrics::decay_diagnostic(&skew, theta, 1001)?;
        println!(
            "theta = {theta}: m_3 = {third:.5}, |E|X-Y| gap| = {:.2e} <= 6e^-theta = {:.2e}: {}",
            check.spread_gap,
            check.bound,
            check.holds()
        );
    }
    Ok(())
}
