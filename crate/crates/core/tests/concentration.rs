//! Small-ball estimates against the LCD-based bound on a small corpus.

use polycond::diophantine::{fit_c1, lcd_estimate, lift_monomial, small_ball_estimate, AlphaPolicy, LcdQuery};
use polycond::ensembles::{DistributionSpec, Purpose, SeedPolicy};

#[test]
fn fitted_c1_stays_moderate_above_inverse_lcd() {
    let gamma0 = 0.5;
    let eps_grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5];
    let seeds = SeedPolicy::new(17);
    let mut checked = 0;
    for (n, d) in [(3usize, 1usize), (4, 2), (5, 2), (3, 3)] {
        for t in 0..4u64 {
            let mut x = seeds.draws(&DistributionSpec::gaussian(), Purpose::Auxiliary, t, n as u64, n);
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            let y = lift_monomial(&x, d).unwrap();
            let alpha = AlphaPolicy { n, d }.alpha();
            let lcd = lcd_estimate(&y, &LcdQuery::for_vector(&y, alpha, gamma0, 200.0).unwrap()).unwrap();
            for dist in [DistributionSpec::rademacher(), DistributionSpec::gaussian()] {
                let rows = small_ball_estimate(&y, &dist, &eps_grid, 20_000, &seeds).unwrap();
                let usable: Vec<_> = rows.into_iter().filter(|r| lcd.found && r.epsilon_or_delta >= 1.0 / lcd.lcd).collect();
                if usable.is_empty() {
                    continue;
                }
                let c1 = fit_c1(&usable, gamma0, alpha);
                assert!(c1 <= 16.0, "n = {n}, d = {d}, trial {t}: C1 = {c1}");
                checked += 1;
            }
        }
    }
    assert!(checked > 0, "no case had a finite LCD below the scan bound");
}
