//! Binomial intervals and small summaries used by the Monte Carlo code.

use serde::{Deserialize, Serialize};

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes in `trials`.
pub fn wilson(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nn = trials as f64;
    let p = hits as f64 / nn;
    let z2 = z * z;
    let denom = 1.0 + z2 / nn;
    let center = (p + z2 / (2.0 * nn)) / denom;
    let half = z / denom * (p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)).sqrt();
    // the interval endpoints at p = 0 and p = 1 are exact in real arithmetic
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits >= trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// A proportion with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(hits: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson(hits, trials, Z95);
        let estimate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Self { hits, trials, estimate, ci_low, ci_high }
    }

    /// Whether `p` lies in the Wilson interval at `z` standard deviations.
    pub fn contains_at(&self, p: f64, z: f64) -> bool {
        let (lo, hi) = wilson(self.hits, self.trials, z);
        lo <= p && p <= hi
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`, skipping nonpositive points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
