//! Full-budget runs. Slow on one core; run with `cargo test -- --ignored`.

use polycond::ensembles::SeedPolicy;
use polycond::harness::{run_corollary_events, ExperimentConfig};
use polycond::SystemShape;

#[test]
#[ignore = "10⁴ witness searches, roughly an hour on one core"]
fn gaussian_quadrics_never_show_an_exact_double_root() {
    let grid = vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    let cfg = ExperimentConfig::new(SystemShape::new(4, 2).unwrap(), 10_000, grid, SeedPolicy::new(2024));
    let e = run_corollary_events(&cfg).unwrap();
    assert_eq!(e.double_root.hits, 0);
    for curve in [&e.regular_root, &e.critical_value, &e.simultaneous] {
        assert!(curve.windows(2).all(|w| w[0].hits <= w[1].hits));
    }
}
