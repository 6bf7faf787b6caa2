//! Acceptance criteria 1–7; prints one PASS/FAIL line each and exits
//! non-zero if any fails.

use std::path::Path;
use std::time::Instant;

use freestein::analytic::{self, MeasureSpec, C64};
use freestein::experiment::{self, ExperimentConfig, Metric, Row};
use freestein::moments::{self, FreeCumulantSequence, MomentSequence};
use freestein::ncpart::{self, NcLattice, NcPartition};
use freestein::ncsymb;
use freestein::stein;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lattice() -> Outcome {
    let start = Instant::now();
    let mut counts_ok = true;
    for n in 1..=10 {
        let count = ncpart::enumerate_nc(n).unwrap().len() as u64;
        counts_ok &= count == ncpart::catalan(n as u32).unwrap();
    }
    let mut closure_worst = 0i64;
    let mut intervals = 0usize;
    for n in 1..=6 {
        let lat = NcLattice::new(n).unwrap();
        let len = lat.elements().len();
        for p in 0..len {
            let row = lat.mobius_row(p);
            for q in p..len {
                if !lat.leq(p, q) {
                    continue;
                }
                intervals += 1;
                let sum: i64 = (p..=q)
                    .filter(|&r| lat.leq(p, r) && lat.leq(r, q))
                    .map(|r| row[r])
                    .sum();
                let expected = i64::from(p == q);
                closure_worst = closure_worst.max((sum - expected).abs());
            }
        }
    }
    let mut top_ok = true;
    for n in 1..=7 {
        let expected = if n % 2 == 1 { 1 } else { -1 } * ncpart::catalan(n as u32 - 1).unwrap() as i64;
        let by_recursion = ncpart::mobius(&NcPartition::finest(n), &NcPartition::coarsest(n)).unwrap();
        let lat = NcLattice::new(n).unwrap();
        let bottom = lat.index_of(&NcPartition::finest(n)).unwrap();
        let top = lat.index_of(&NcPartition::coarsest(n)).unwrap();
        top_ok &= by_recursion == expected && lat.mobius_row(bottom)[top] == expected;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        counts_ok && closure_worst == 0 && top_ok && secs < 60.0,
        format!(
            "|NC(n)| = Catalan(n) for n <= 10: {counts_ok}; closure over {intervals} intervals (n <= 6) worst {closure_worst}; \
             mu(0,1) = (-1)^(n-1) C_(n-1) for n <= 7: {top_ok}; {secs:.2}s"
        ),
    )
}

fn random_atomic(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let k = rng.random_range(1..=5);
    let mut atoms: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.1..1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in &mut atoms {
        a.1 /= total;
    }
    atoms
}

fn transforms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut laws: Vec<MomentSequence> = stein::test_battery()
        .iter()
        .map(|(_, m)| m.moments(10).unwrap())
        .collect();
    laws.push(
        MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)])
            .unwrap()
            .moments(10)
            .unwrap(),
    );
    for _ in 0..50 {
        laws.push(moments::atomic_moments(&random_atomic(&mut rng), 10).unwrap());
    }
    let mut worst = 0.0f64;
    for m in &laws {
        let back = moments::cumulants_to_moments(&moments::moments_to_cumulants(m).unwrap()).unwrap();
        for j in 0..=10 {
            worst = worst.max((back.get(j) - m.get(j)).abs() / m.get(j).abs().max(1.0));
        }
    }
    let s = moments::semicircle_moments(10).unwrap();
    let k = moments::moments_to_cumulants(&s).unwrap();
    let exact = (1..=10).all(|j| k.get(j) == if j == 2 { 1.0 } else { 0.0 });
    let stein_worst = stein::stein_discrepancy(&s).max_abs();
    outcome(
        worst <= 1e-12 && exact && stein_worst <= 1e-12,
        format!(
            "round trip through order 10 over {} laws: worst relative error {worst:.2e} (<= 1e-12); \
             semicircle cumulants exactly (0,1,0,...): {exact}; Stein discrepancy {stein_worst:.1e} (<= 1e-12)",
            laws.len()
        ),
    )
}

fn engines() -> Outcome {
    let start = Instant::now();
    let bernoulli = MeasureSpec::bernoulli();
    let k = moments::moments_to_cumulants(&bernoulli.moments(8).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for n in [2usize, 4, 8] {
        let summed = FreeCumulantSequence::new(k.values().iter().map(|c| c * n as f64).collect()).unwrap();
        let exact = moments::cumulants_to_moments(&summed).unwrap();
        let ev = analytic::nfold_evaluator(bernoulli.evaluator(), n, 1.0).unwrap();
        let contour = analytic::moments_from_evaluator(&*ev, 8).unwrap();
        for j in 0..=8 {
            worst = worst.max((contour.get(j) - exact.get(j)).abs());
        }
    }
    let arcsine = analytic::nfold_convolve(&bernoulli, 2, 1.0).unwrap();
    let density = analytic::stieltjes_density(&*arcsine, -2.5, 2.5, 2001).unwrap();
    let mut density_worst = 0.0f64;
    for i in 0..density.n_points() {
        let x = density.x(i);
        if x.abs() <= 1.8 {
            let exact = 1.0 / (std::f64::consts::PI * (4.0 - x * x).sqrt());
            density_worst = density_worst.max((density.values()[i] - exact).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-5 && density_worst <= 1e-3 && secs < 300.0,
        format!(
            "Bernoulli n = 2, 4, 8 moments through order 8: worst gap {worst:.2e} (<= 1e-5); \
             arcsine density on |x| <= 1.8: worst error {density_worst:.2e} (<= 1e-3); {secs:.2}s"
        ),
    )
}

fn stein_machinery() -> Outcome {
    let mut fd_worst = 0.0f64;
    let mut pairing_worst = 0.0f64;
    for (_, mu) in stein::test_battery() {
        let m = mu.moments(8).unwrap();
        for p in 1..=8 {
            let exact = stein::generator_apply(&m, p).unwrap();
            let fd = stein::generator_finite_difference(&mu, p, 1e-5).unwrap();
            fd_worst = fd_worst.max((fd - exact).abs());
        }
        for p in 1..=6 {
            let mut h = vec![0.0; p + 1];
            h[p] = 1.0;
            let pairing = stein::dual_stein_pairing(&mu, &h, 40.0, 200).unwrap();
            let target = stein::dual_stein_target(&mu, &h).unwrap();
            pairing_worst = pairing_worst.max((pairing.value - target).abs());
        }
    }
    outcome(
        fd_worst <= 1e-3 && pairing_worst <= 1e-6,
        format!(
            "generator finite difference (step 1e-5, p <= 8, 5 laws): worst {fd_worst:.2e} (<= 1e-3); \
             dual pairing residual (p <= 6): worst {pairing_worst:.2e} (<= 1e-6)"
        ),
    )
}

fn resolvent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let z = C64::new(2.5, 0.5);
    let mut lemma_worst = 0.0f64;
    let mut delta_worst = 0.0f64;
    for _ in 0..50 {
        let (a, r) = ncsymb::random_instance(&mut rng, 6, z);
        for q in 1..=5 {
            lemma_worst = lemma_worst.max(ncsymb::resolvent_lemma_check(&a, &r, z, q).unwrap());
        }
        delta_worst = delta_worst.max(ncsymb::delta_identity_residual(&a, &r, z).unwrap());
    }
    outcome(
        lemma_worst < 1e-9 && delta_worst <= 1e-11,
        format!(
            "50 seeded 6x6 instances, q <= 5: worst residual {lemma_worst:.2e} (< 1e-9); \
             Delta identity worst {delta_worst:.2e} (<= 1e-11)"
        ),
    )
}

fn run(base: &str, dir: &Path, name: &str) -> (ExperimentConfig, Vec<Row>) {
    let text =
        format!(r#"{{"base_measure": {base}, "n_values": [8, 16, 32, 64, 128, 256, 512], "output": "{name}.csv"}}"#);
    let cfg = ExperimentConfig::from_json(&text, Some(dir)).unwrap();
    let rows = experiment::run_experiment(&cfg).unwrap();
    (cfg, rows)
}

fn rates() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (cfg, bernoulli) = run(
        r#"{"kind": "atomic", "atoms": [[1, 0.5], [-1, 0.5]]}"#,
        dir.path(),
        "bernoulli",
    );
    let (_, skewed) = run(
        r#"{"kind": "atomic", "atoms": [[2, 0.2], [-0.5, 0.8]]}"#,
        dir.path(),
        "two_atom",
    );
    let floor = experiment::discretization_floor(&cfg.n_values, &cfg.grid).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, rows, metric, target) in [
        ("Bernoulli w1", &bernoulli, Metric::W1, -1.0),
        ("two-atom w1", &skewed, Metric::W1, -0.5),
        ("two-atom kol", &skewed, Metric::Kol, -0.5),
        ("two-atom tv", &skewed, Metric::Tv, -0.5),
    ] {
        match experiment::fit_rate(
            metric.name(),
            &experiment::metric_points(rows, metric),
            floor.get(metric),
        ) {
            Ok(fit) => {
                let ok = (fit.slope - target).abs() <= 0.15;
                pass &= ok;
                parts.push(format!(
                    "{label} slope {:.3} (target {target} +- 0.15, r2 {:.4}, {} points)",
                    fit.slope,
                    fit.r_squared,
                    fit.points.len()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{label} {e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 1800.0;
    parts.push(format!("{secs:.1}s"));
    outcome(pass, parts.join("; "))
}

fn superconvergence() -> Outcome {
    let ns = [64usize, 128, 256, 512];
    let report =
        experiment::superconvergence(&MeasureSpec::bernoulli(), &ns, &experiment::GridConfig::default()).unwrap();
    let worst = report.mass_outside.iter().fold(0.0f64, |m, p| m.max(p.1));
    outcome(
        worst < experiment::SUPERCONVERGENCE_MASS,
        format!("Bernoulli n in {ns:?}: worst mass outside [-3, 3] {worst:.2e} (< 1e-3)"),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("lattice", lattice),
        ("transforms", transforms),
        ("engine agreement", engines),
        ("Stein machinery", stein_machinery),
        ("resolvent lemma", resolvent),
        ("rate reproduction", rates),
        ("superconvergence", superconvergence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {} {name}: {} | {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
