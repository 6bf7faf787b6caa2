//! Cross-checks between independent engines.

use std::sync::Arc;

use freestein::analytic::{self, FreeSum, MeasureSpec};
use freestein::experiment::{self, GridConfig};
use freestein::metrics;
use freestein::moments::{self, FreeCumulantSequence};
use freestein::stein;

#[test]
fn subordination_matches_cumulants_for_distinct_laws() {
    let a = MeasureSpec::bernoulli();
    let b = MeasureSpec::atomic(vec![(-1.0, 0.3), (0.5, 0.5), (2.0, 0.2)]).unwrap();
    let sum = FreeSum::new(a.evaluator(), b.evaluator());
    let contour = analytic::moments_from_evaluator(&sum, 8).unwrap();
    let exact = moments::free_convolve_cumulants(&a.moments(8).unwrap(), &b.moments(8).unwrap()).unwrap();
    for j in 0..=8 {
        assert!(
            (contour.get(j) - exact.get(j)).abs() < 1e-8 * exact.get(j).abs().max(1.0),
            "m_{j}"
        );
    }
}

#[test]
fn ou_flow_matches_cumulant_evolution() {
    let mu = MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)]).unwrap();
    for theta in [0.1, 0.7, 2.0] {
        let ev = analytic::ou_semigroup(&mu, theta).unwrap();
        let contour = analytic::moments_from_evaluator(&*ev, 6).unwrap();
        let exact = moments::ou_evolve(&mu.moments(6).unwrap(), theta).unwrap();
        for j in 0..=6 {
            assert!((contour.get(j) - exact.get(j)).abs() < 1e-8, "theta {theta}, m_{j}");
        }
    }
}

#[test]
fn dilated_power_moments() {
    let mu = MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)]).unwrap();
    let n = 16;
    let ev = analytic::nfold_convolve(&mu, n, 0.25).unwrap();
    let contour = analytic::moments_from_evaluator(&*ev, 6).unwrap();
    let k = moments::moments_to_cumulants(&moments::dilate_moments(&mu.moments(6).unwrap(), 0.25).unwrap()).unwrap();
    let kn = FreeCumulantSequence::new(k.values().iter().map(|c| c * n as f64).collect()).unwrap();
    let exact = moments::cumulants_to_moments(&kn).unwrap();
    for j in 0..=6 {
        let scale = exact.get(j).abs().max(1.0);
        assert!(
            (contour.get(j) - exact.get(j)).abs() < 1e-8 * scale,
            "m_{j}: {} vs {}",
            contour.get(j),
            exact.get(j)
        );
    }
    // Third free cumulant shrinks like n^{-1/2}, as in the free CLT.
    assert!((kn.get(3) - k.get(3) * 16.0).abs() < 1e-12);
    assert!((kn.get(3) - mu.moments(3).unwrap().get(3) / 4.0).abs() < 1e-12);
}

#[test]
fn semicircle_is_a_fixed_point_everywhere() {
    let s = MeasureSpec::standard_semicircle();
    let m = s.moments(8).unwrap();
    assert_eq!(stein::stein_discrepancy(&m).max_abs(), 0.0);
    for p in 1..=8 {
        assert_eq!(stein::generator_apply(&m, p).unwrap(), 0.0);
    }
    let flowed = analytic::ou_semigroup(&s, 1.3).unwrap();
    let d = analytic::recover_density(&*flowed, Some((-2.5, 2.5)), 2001)
        .unwrap()
        .density;
    let reference = analytic::GridDensity::from_fn(-2.5, 2.5, 2001, |x| s.density(x).unwrap()).unwrap();
    let r = metrics::distances(&d, &reference).unwrap();
    assert!(r.d_kol < 1e-4 && r.d_w1 < 1e-4, "{r:?}");
}

#[test]
fn grid_base_measure_round_trip() {
    // A semicircle stored as a CSV grid behaves like the exact law.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("base.csv");
    let s = MeasureSpec::standard_semicircle();
    let g = analytic::GridDensity::from_fn(-2.0, 2.0, 401, |x| s.density(x).unwrap()).unwrap();
    let unit = analytic::GridDensity::new(-2.0, 2.0, g.values().iter().map(|v| v / g.mass()).collect()).unwrap();
    unit.save(&path).unwrap();
    let text = r#"{"base_measure": {"kind": "grid", "path": "base.csv"}, "normalize": true, "n_values": [4, 16],
        "grid": {"window": [-3, 3], "n_points": 601}, "output": "rows.csv"}"#;
    let cfg = experiment::ExperimentConfig::from_json(text, Some(dir.path())).unwrap();
    for row in experiment::run_experiment(&cfg).unwrap() {
        assert!(row.d_kol.unwrap() < 1e-3 && row.d_w1.unwrap() < 1e-3, "{row:?}");
    }
}

#[test]
fn superconvergence_report() {
    let report = experiment::superconvergence(
        &MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)]).unwrap(),
        &[2, 4, 64],
        &GridConfig::default(),
    )
    .unwrap();
    assert_eq!(report.mass_outside.len(), 3);
    assert!(report.mass_outside[2].1 < experiment::SUPERCONVERGENCE_MASS);
    assert!(report.smallest_n.is_some_and(|n| n <= 64));
}

#[test]
fn arc_helper_is_shareable() {
    let ev: analytic::Evaluator = Arc::new(FreeSum::new(
        MeasureSpec::bernoulli().evaluator(),
        MeasureSpec::bernoulli().evaluator(),
    ));
    let clone = Arc::clone(&ev);
    std::thread::spawn(move || clone.support()).join().unwrap();
}
