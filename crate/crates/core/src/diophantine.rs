//! Essential LCD, the monomial lift, small-ball probabilities and the
//! tensorization check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{DistributionSpec, Purpose, SeedPolicy};
use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};
use crate::stats::Proportion;
use crate::system::DEFAULT_ENTRY_CAP;

/// Euclidean distance from `v` to the integer lattice.
pub fn dist_to_lattice<T: Scalar>(v: &[T]) -> T {
    v.iter()
        .map(|&a| {
            let r = (a - a.round()).abs();
            r * r
        })
        .sum::<T>()
        .sqrt()
}

/// `(x_{i₁} ⋯ x_{i_d})` over all `n^d` index tuples, row-major.
pub fn lift_monomial<T: Scalar>(x: &[T], d: usize) -> Result<Vec<T>> {
    let n = x.len();
    let size = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > DEFAULT_ENTRY_CAP {
        return Err(Error::Allocation { requested: size, cap: DEFAULT_ENTRY_CAP });
    }
    let mut out = vec![T::one()];
    for _ in 0..d {
        out = out.iter().flat_map(|&p| x.iter().map(move |&xi| p * xi)).collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcdQuery {
    pub alpha: f64,
    pub gamma0: f64,
    pub d_max: f64,
    pub coarse_step: f64,
    pub refine_tol: f64,
}

impl LcdQuery {
    pub fn new(alpha: f64, gamma0: f64, d_max: f64, coarse_step: f64, refine_tol: f64) -> Result<Self> {
        let q = Self { alpha, gamma0, d_max, coarse_step, refine_tol };
        q.validate()?;
        Ok(q)
    }

    /// Uses `coarse_step = min(1e−3, 1/(4‖y‖∞))` and `refine_tol = 1e−7`,
    /// capped below the step.
    pub fn for_vector(y: &[f64], alpha: f64, gamma0: f64, d_max: f64) -> Result<Self> {
        let inf = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if inf == 0.0 {
            return Err(Error::Argument("LCD of the zero vector".into()));
        }
        let step = 1e-3f64.min(1.0 / (4.0 * inf));
        Self::new(alpha, gamma0, d_max, step, 1e-7f64.min(step / 10.0))
    }

    fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.gamma0 > 0.0
            && self.gamma0 < 1.0
            && self.d_max > 0.0
            && self.coarse_step > 0.0
            && self.coarse_step < 0.5
            && self.refine_tol > 0.0
            && self.refine_tol < self.coarse_step;
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid LCD query {self:?}")))
        }
    }
}

/// The defining inequality evaluated at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcdCertificate {
    pub d_star: f64,
    pub lattice_dist: f64,
    pub threshold: f64,
}

impl LcdCertificate {
    pub fn at(y: &[f64], q: &LcdQuery, d: f64) -> Self {
        let dy: Vec<f64> = y.iter().map(|v| d * v).collect();
        Self {
            d_star: d,
            lattice_dist: dist_to_lattice(&dy),
            threshold: (q.gamma0 * norm(&dy)).min(q.alpha),
        }
    }

    pub fn holds(&self) -> bool {
        self.lattice_dist < self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcdResult {
    pub found: bool,
    /// Meaningful only when `found`.
    pub lcd: f64,
    pub certificate: Option<LcdCertificate>,
}

/// Scans `D` over `[step, d_max]` and bisects the first qualifying window
/// down to `refine_tol`. The returned scale always satisfies the defining
/// inequality.
pub fn lcd_estimate(y: &[f64], q: &LcdQuery) -> Result<LcdResult> {
    q.validate()?;
    if !(norm(y) > 0.0) {
        return Err(Error::Argument("LCD needs a nonzero vector".into()));
    }
    let mut lo = 0.0;
    let mut k = 1u64;
    loop {
        let d = k as f64 * q.coarse_step;
        if d > q.d_max {
            return Ok(LcdResult { found: false, lcd: f64::INFINITY, certificate: None });
        }
        if LcdCertificate::at(y, q, d).holds() {
            let mut hi = d;
            while hi - lo > q.refine_tol {
                let mid = 0.5 * (lo + hi);
                if LcdCertificate::at(y, q, mid).holds() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let cert = LcdCertificate::at(y, q, hi);
            debug_assert!(cert.holds());
            return Ok(LcdResult { found: true, lcd: hi, certificate: Some(cert) });
        }
        lo = d;
        k += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRegime {
    /// `2 ≤ d ≤ ln n / (3 ln ln n)`
    SmallDegree,
    LargeDegree,
}

/// Level `α` used with the LCD for a given `(n, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPolicy {
    pub n: usize,
    pub d: usize,
}

impl AlphaPolicy {
    pub fn regime(&self) -> AlphaRegime {
        let ln = (self.n as f64).ln();
        let lnln = ln.ln();
        if self.d >= 2 && lnln > 0.0 && (self.d as f64) <= ln / (3.0 * lnln) {
            AlphaRegime::SmallDegree
        } else {
            AlphaRegime::LargeDegree
        }
    }

    pub fn alpha(&self) -> f64 {
        let (n, d) = (self.n as f64, self.d as f64);
        match self.regime() {
            AlphaRegime::SmallDegree => n.powf(7.0 * d / 16.0 - 0.25),
            AlphaRegime::LargeDegree => n.powf(d / 4.0),
        }
    }
}

/// One row of a concentration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// ε for small-ball tables, δ for tensorization tables.
    pub epsilon_or_delta: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub hits: u64,
}

impl TableRow {
    fn from_counts(x: f64, hits: u64, trials: u64) -> Self {
        let p = Proportion::new(hits, trials);
        Self { epsilon_or_delta: x, estimate: p.estimate, ci_low: p.ci_low, ci_high: p.ci_high, trials, hits }
    }

    pub fn proportion(&self) -> Proportion {
        Proportion::new(self.hits, self.trials)
    }
}

/// Trials per seed stream in the batched samplers.
const BLOCK: usize = 4096;

fn sample_blocks<R: Send>(
    trials: usize,
    width: usize,
    dist: &DistributionSpec,
    seeds: &SeedPolicy,
    purpose: Purpose,
    per_block: impl Fn(&[f64]) -> R + Sync,
) -> Vec<R> {
    let blocks = trials.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(trials - b * BLOCK);
            let mut buf = vec![0.0; count * width];
            seeds.fill(dist, purpose, b as u64, 0, &mut buf);
            per_block(&buf)
        })
        .collect()
}

/// Monte Carlo estimate of `Q(ε) = sup_v P(|Σ aᵢyᵢ − v| ≤ ε)` for every
/// `ε` in the grid, from the same `trials` samples. The sup over shifts is
/// taken exactly over the sorted sample (largest count in any window of
/// width `2ε`).
pub fn small_ball_estimate(
    y: &[f64],
    dist: &DistributionSpec,
    eps_grid: &[f64],
    trials: usize,
    seeds: &SeedPolicy,
) -> Result<Vec<TableRow>> {
    if norm(y) < 1.0 - 1e-12 {
        return Err(Error::Precondition(format!("small-ball estimate needs ‖y‖ ≥ 1, got {}", norm(y))));
    }
    if trials < 10_000 {
        return Err(Error::Precondition(format!("small-ball estimate needs ≥ 10⁴ trials, got {trials}")));
    }
    if eps_grid.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::Argument("eps grid must be nonnegative".into()));
    }
    let m = y.len();
    let mut sums: Vec<f64> = sample_blocks(trials, m, dist, seeds, Purpose::SmallBall, |buf| {
        buf.chunks(m).map(|a| a.iter().zip(y).map(|(x, w)| x * w).sum::<f64>()).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    sums.sort_by(f64::total_cmp);
    Ok(eps_grid
        .iter()
        .map(|&eps| TableRow::from_counts(eps, max_window_count(&sums, 2.0 * eps), trials as u64))
        .collect())
}

/// Largest number of sorted points inside a closed window of the given width.
fn max_window_count(sorted: &[f64], width: f64) -> u64 {
    let mut best = 0usize;
    let mut hi = 0usize;
    for lo in 0..sorted.len() {
        if hi < lo {
            hi = lo;
        }
        while hi < sorted.len() && sorted[hi] - sorted[lo] <= width {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best as u64
}

/// How the scalars `η_l` are formed in [`tensorization_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    /// `η_l = |ξ_l|`
    Raw,
    /// `η_l = |Σ_i a_{l,i} y_i|` with a fresh coefficient row per `l`.
    Weighted(Vec<f64>),
}

/// Empirical `P(Σ_{l ≤ n} η_l² < δ²n)` for each `δ` in the grid.
pub fn tensorization_check(
    dist: &DistributionSpec,
    n: usize,
    delta_grid: &[f64],
    trials: usize,
    seeds: &SeedPolicy,
    mode: &EtaMode,
) -> Result<Vec<TableRow>> {
    if trials < 100_000 {
        return Err(Error::Precondition(format!("tensorization check needs ≥ 10⁵ trials, got {trials}")));
    }
    if n == 0 {
        return Err(Error::Argument("n must be positive".into()));
    }
    let width = match mode {
        EtaMode::Raw => 1,
        EtaMode::Weighted(y) if !y.is_empty() => y.len(),
        EtaMode::Weighted(_) => return Err(Error::Argument("empty weight vector".into())),
    };
    let cut: Vec<f64> = delta_grid.iter().map(|&d| d * d * n as f64).collect();
    let counts = sample_blocks(trials, n * width, dist, seeds, Purpose::Tensorization, |buf| {
        let mut hits = vec![0u64; cut.len()];
        for trial in buf.chunks(n * width) {
            let s: f64 = trial
                .chunks(width)
                .map(|a| {
                    let eta = match mode {
                        EtaMode::Raw => a[0],
                        EtaMode::Weighted(y) => a.iter().zip(y).map(|(x, w)| x * w).sum(),
                    };
                    eta * eta
                })
                .sum();
            for (h, &c) in hits.iter_mut().zip(&cut) {
                if s < c {
                    *h += 1;
                }
            }
        }
        hits
    });
    let mut total = vec![0u64; cut.len()];
    for c in counts {
        total.iter_mut().zip(c).for_each(|(t, v)| *t += v);
    }
    Ok(delta_grid
        .iter()
        .zip(total)
        .map(|(&d, h)| TableRow::from_counts(d, h, trials as u64))
        .collect())
}

/// Smallest `C₁` with `Q(ε) ≤ C₁(ε/γ₀ + e^{−2α²})` on every row.
pub fn fit_c1(rows: &[TableRow], gamma0: f64, alpha: f64) -> f64 {
    rows.iter()
        .map(|r| r.estimate / (r.epsilon_or_delta / gamma0 + (-2.0 * alpha * alpha).exp()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::unflatten;

    #[test]
    fn lattice_distance_basics() {
        assert_eq!(dist_to_lattice(&[3.0, -2.0]), 0.0);
        assert!((dist_to_lattice(&[0.5, 0.5]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((dist_to_lattice(&[1.2, -0.9]) - (0.04f64 + 0.01).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lift_matches_index_product() {
        let x = [0.3, -1.0, 2.0];
        let lift = lift_monomial(&x, 3).unwrap();
        let mut idx = [0usize; 3];
        for (k, &v) in lift.iter().enumerate() {
            unflatten(k, 3, &mut idx);
            assert_eq!(v, x[idx[0]] * x[idx[1]] * x[idx[2]]);
        }
    }

    #[test]
    fn window_count() {
        let s = [0.0, 0.1, 0.15, 0.5, 0.55, 0.6, 0.62];
        assert_eq!(max_window_count(&s, 0.12), 4);
        assert_eq!(max_window_count(&s, 0.0), 1);
        assert_eq!(max_window_count(&s, 10.0), 7);
    }

    #[test]
    fn alpha_policy_regimes() {
        // ln 10⁶ / (3 ln ln 10⁶) ≈ 1.76 < 2
        assert_eq!(AlphaPolicy { n: 1_000_000, d: 2 }.regime(), AlphaRegime::LargeDegree);
        let p = AlphaPolicy { n: 16, d: 2 };
        // ln 16 / (3 ln ln 16) ≈ 0.90
        assert_eq!(p.regime(), AlphaRegime::LargeDegree);
        assert!((p.alpha() - 4.0).abs() < 1e-12);
        let big = AlphaPolicy { n: 1usize << 60, d: 2 };
        assert_eq!(big.regime(), AlphaRegime::SmallDegree);
        assert!((big.alpha() - 2f64.powf(60.0 * (7.0 / 8.0 - 0.25))).abs() / big.alpha() < 1e-12);
    }

    #[test]
    fn lattice_distance_matches_box_enumeration() {
        let seeds = SeedPolicy::new(3);
        for m in 1..=6usize {
            for t in 0..20u64 {
                let v: Vec<f64> = seeds.draws(&DistributionSpec::gaussian(), Purpose::Auxiliary, t, m as u64, m).iter().map(|x| 3.0 * x).collect();
                let mut best = f64::INFINITY;
                for code in 0..3usize.pow(m as u32) {
                    let mut c = code;
                    let mut s = 0.0;
                    for &vi in &v {
                        let z = vi.round() + (c % 3) as f64 - 1.0;
                        c /= 3;
                        s += (vi - z) * (vi - z);
                    }
                    best = best.min(s.sqrt());
                }
                assert!((dist_to_lattice(&v) - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lift_norm_and_basis_vector() {
        let lift = lift_monomial(&[1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(lift[0], 1.0);
        assert_eq!(lift.iter().filter(|&&v| v != 0.0).count(), 1);
        let x = [0.36f64, -0.48, 0.8];
        assert!((norm(&lift_monomial(&x, 4).unwrap()) - 1.0).abs() < 1e-12);
        assert!(lift_monomial(&vec![0.1; 100], 6).is_err());
    }

    #[test]
    fn evaluate_is_tensor_times_lift() {
        use crate::system::{PolynomialSystem, SystemShape};
        let shape = SystemShape::new(4, 3).unwrap();
        let t = crate::ensembles::sample_system(shape, &DistributionSpec::gaussian(), &SeedPolicy::new(2), 0).unwrap();
        let x = [0.3, -1.1, 0.4, 0.9];
        let lift = lift_monomial(&x, 3).unwrap();
        let f = PolynomialSystem::homogeneous(t.clone()).evaluate(&x).unwrap();
        for (l, fl) in f.iter().enumerate() {
            let row = &t.as_slice()[l * 64..(l + 1) * 64];
            let v: f64 = row.iter().zip(&lift).map(|(a, b)| a * b).sum();
            assert!((v - fl).abs() < 1e-12 * (1.0 + fl.abs()));
        }
    }

    #[test]
    fn lcd_scalar_example() {
        let q = LcdQuery::for_vector(&[1.0], 0.4, 0.5, 2.0).unwrap();
        let r = lcd_estimate(&[1.0], &q).unwrap();
        assert!(r.found);
        assert!((r.lcd - 2.0 / 3.0).abs() <= 1e-4);
        assert!(r.certificate.unwrap().holds());
    }

    #[test]
    fn lcd_half_vector_example() {
        let y = [0.5; 4];
        let q = LcdQuery::for_vector(&y, 0.7, 0.5, 2.0).unwrap();
        let r = lcd_estimate(&y, &q).unwrap();
        assert!(r.found);
        assert!((r.lcd - 4.0 / 3.0).abs() <= 1e-4, "{}", r.lcd);
    }

    #[test]
    fn lcd_scaling_law() {
        let y = [0.5; 4];
        let base = lcd_estimate(&y, &LcdQuery::for_vector(&y, 0.7, 0.5, 2.0).unwrap()).unwrap().lcd;
        for c in [0.5, 2.0] {
            let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
            let q = LcdQuery::for_vector(&cy, 0.7, 0.5, 2.0 / c).unwrap();
            let r = lcd_estimate(&cy, &q).unwrap();
            assert!((r.lcd - base / c).abs() <= 1e-3, "c = {c}: {}", r.lcd);
        }
    }

    #[test]
    fn lcd_not_found_and_bad_queries() {
        let q = LcdQuery::for_vector(&[1.0], 0.4, 0.5, 0.6).unwrap();
        assert!(!lcd_estimate(&[1.0], &q).unwrap().found);
        assert!(LcdQuery::new(0.4, 0.5, 2.0, 0.6, 0.1).is_err());
        assert!(LcdQuery::new(0.4, 1.5, 2.0, 0.1, 0.01).is_err());
        assert!(lcd_estimate(&[0.0, 0.0], &LcdQuery::new(0.4, 0.5, 2.0, 0.1, 0.01).unwrap()).is_err());
    }

    #[test]
    fn small_ball_rademacher_exact() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rows = small_ball_estimate(&[h, h], &DistributionSpec::rademacher(), &[0.1], 100_000, &SeedPolicy::new(1)).unwrap();
        assert!(rows[0].proportion().contains_at(0.5, 3.0), "{:?}", rows[0]);
    }

    #[test]
    fn small_ball_gaussian_density_bound() {
        let eps = [1e-3, 0.01, 0.1, 0.25, 0.5];
        let rows = small_ball_estimate(&[1.0], &DistributionSpec::gaussian(), &eps, 100_000, &SeedPolicy::new(2)).unwrap();
        for r in &rows {
            // the standard normal density is below 1/2, so an interval of width 2ε has mass ≤ ε
            assert!(r.ci_low <= r.epsilon_or_delta, "{r:?}");
            assert!(r.estimate <= 1.0);
        }
        assert!(rows[0].ci_low <= 2e-3);
        assert!(rows.windows(2).all(|w| w[0].hits <= w[1].hits));
    }

    #[test]
    fn small_ball_preconditions() {
        let g = DistributionSpec::gaussian();
        assert!(matches!(small_ball_estimate(&[0.5], &g, &[0.1], 100_000, &SeedPolicy::new(1)), Err(Error::Precondition(_))));
        assert!(matches!(small_ball_estimate(&[1.0], &g, &[0.1], 9_999, &SeedPolicy::new(1)), Err(Error::Precondition(_))));
    }

    #[test]
    fn tensorization_gaussian_example() {
        let rows = tensorization_check(&DistributionSpec::gaussian(), 6, &[0.1, 0.5, 1.0, 100.0], 100_000, &SeedPolicy::new(3), &EtaMode::Raw)
            .unwrap();
        assert!(rows[0].estimate <= 0.3f64.powi(6));
        assert!(rows.windows(2).all(|w| w[0].hits <= w[1].hits));
        assert_eq!(rows[3].hits, rows[3].trials);
        let again = tensorization_check(&DistributionSpec::gaussian(), 6, &[0.1, 0.5, 1.0, 100.0], 100_000, &SeedPolicy::new(3), &EtaMode::Raw)
            .unwrap();
        assert_eq!(rows, again);
        assert!(tensorization_check(&DistributionSpec::gaussian(), 6, &[0.1], 10, &SeedPolicy::new(3), &EtaMode::Raw).is_err());
    }

    #[test]
    fn tensorization_weighted_mode() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let raw = tensorization_check(&DistributionSpec::gaussian(), 4, &[0.5], 100_000, &SeedPolicy::new(4), &EtaMode::Raw).unwrap();
        let w = tensorization_check(&DistributionSpec::gaussian(), 4, &[0.5], 100_000, &SeedPolicy::new(4), &EtaMode::Weighted(vec![h, h]))
            .unwrap();
        // a unit-norm Gaussian combination is again standard normal
        let (a, b) = (raw[0].proportion(), w[0].proportion());
        let se = (a.estimate * (1.0 - a.estimate) * 2.0 / a.trials as f64).sqrt();
        assert!((a.estimate - b.estimate).abs() < 5.0 * se);
    }

    #[test]
    fn c1_fit_is_tight() {
        let rows = vec![
            TableRow { epsilon_or_delta: 0.1, estimate: 0.2, ci_low: 0.0, ci_high: 1.0, trials: 10, hits: 2 },
            TableRow { epsilon_or_delta: 0.2, estimate: 0.3, ci_low: 0.0, ci_high: 1.0, trials: 10, hits: 3 },
        ];
        let c = fit_c1(&rows, 0.5, 10.0);
        assert!((c - 1.0).abs() < 1e-12);
    }
}
