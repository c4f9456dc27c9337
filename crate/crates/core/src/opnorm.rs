//! Alternating maximization (higher-order power method) for
//! `sup Σ_l a_l(x₁, …, x_d)²` over unit vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{DistributionSpec, Purpose, SeedPolicy};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, normalize, Scalar};
use crate::system::{CoefficientTensor, TensorView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpnormOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Relative change of the objective between sweeps that ends a restart.
    pub tol: f64,
    pub seeds: SeedPolicy,
    /// Selects the family of start vectors; restart `r` uses sub-stream `r`.
    pub stream: u64,
}

impl Default for OpnormOptions {
    fn default() -> Self {
        Self { restarts: 20, max_sweeps: 200, tol: 1e-10, seeds: SeedPolicy::default(), stream: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpnormResult<T> {
    /// Squared sup estimate, a lower bound on the true value.
    pub value: T,
    /// One unit vector per slot.
    pub arg: Vec<Vec<T>>,
    /// Sweeps run by the best restart.
    pub sweeps: usize,
    pub restarts: usize,
    /// The best restart met the tolerance before `max_sweeps`.
    pub converged: bool,
    /// Objective after every sweep of the best restart.
    pub history: Vec<T>,
}

impl<T: Scalar> OpnormResult<T> {
    /// Unsquared sup estimate.
    pub fn norm(&self) -> T {
        self.value.sqrt()
    }
}

/// `Σ_l a_l(v₁, …, v_d)²`.
pub fn objective<T: Scalar>(view: TensorView<'_, T>, arg: &[Vec<T>]) -> T {
    let refs: Vec<&[T]> = arg.iter().map(Vec::as_slice).collect();
    view.contract_all(&refs).iter().map(|&v| v * v).sum()
}

pub fn opnorm_tensor<T: Scalar>(t: &CoefficientTensor<T>, opts: &OpnormOptions) -> OpnormResult<T> {
    opnorm(t.view(), opts)
}

/// Best of `opts.restarts` alternating maximizations. Each slot update
/// replaces the slot by the top right singular vector of the partial
/// contraction, so the objective never decreases within a restart.
pub fn opnorm<T: Scalar>(view: TensorView<'_, T>, opts: &OpnormOptions) -> OpnormResult<T> {
    let restarts = opts.restarts.max(1);
    let mut best: Option<OpnormResult<T>> = None;
    for r in 0..restarts {
        let run = single_restart(view, opts, r as u64);
        // strict improvement keeps the first-found maximizer on ties
        if best.as_ref().map_or(true, |b| run.value > b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts = restarts;
    best
}

fn single_restart<T: Scalar>(view: TensorView<'_, T>, opts: &OpnormOptions, r: u64) -> OpnormResult<T> {
    let (n, d) = (view.vars, view.degree);
    let raw = opts.seeds.draws(&DistributionSpec::gaussian(), Purpose::Opnorm, opts.stream, r, n * d);
    let mut arg: Vec<Vec<T>> = raw
        .chunks(n)
        .map(|c| {
            let mut v: Vec<T> = c.iter().map(|&x| T::lit(x)).collect();
            if normalize(&mut v) == T::zero() {
                v[0] = T::one();
            }
            v
        })
        .collect();
    let tol = T::lit(opts.tol);
    let mut history = Vec::new();
    let mut prev = objective(view, &arg);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for p in 0..d {
            let refs: Vec<&[T]> = arg.iter().map(Vec::as_slice).collect();
            let b = view.contract_except(&refs, p);
            arg[p] = top_right_singular(&b, &arg[p]);
        }
        let value = objective(view, &arg);
        history.push(value);
        let change = (value - prev).abs();
        prev = value;
        if change <= tol * value || value == T::zero() {
            converged = true;
            break;
        }
    }
    OpnormResult { value: prev, arg, sweeps, restarts: 1, converged, history }
}

const MAX_POWER_ITERS: usize = 20_000;

/// Top right singular vector of `b` by power iteration on `bᵀb`, warm
/// started at `warm`. The Rayleigh quotient is nondecreasing along the
/// iteration, so the result is never worse than `warm`.
pub fn top_right_singular<T: Scalar>(b: &Matrix<T>, warm: &[T]) -> Vec<T> {
    let n = b.cols();
    let mut g = vec![T::zero(); n * n];
    for r in 0..b.rows() {
        let row = b.row(r);
        for i in 0..n {
            let ri = row[i];
            if ri == T::zero() {
                continue;
            }
            for j in i..n {
                g[i * n + j] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[i * n + j] = g[j * n + i];
        }
    }
    let gmul = |v: &[T]| -> Vec<T> { (0..n).map(|i| dot(&g[i * n..(i + 1) * n], v)).collect() };

    let mut v = warm.to_vec();
    if normalize(&mut v) == T::zero() {
        v[0] = T::one();
    }
    let stop = T::epsilon() * T::lit(16.0);
    for _ in 0..MAX_POWER_ITERS {
        let mut gv = gmul(&v);
        let lambda = dot(&v, &gv);
        let len = normalize(&mut gv);
        if len == T::zero() {
            // b annihilates v; every unit vector is optimal only if b = 0
            if g.iter().all(|&x| x == T::zero()) {
                return v;
            }
            let k = (0..n).max_by(|&a, &c| g[a * n + a].partial_cmp(&g[c * n + c]).unwrap()).unwrap();
            v.iter_mut().for_each(|x| *x = T::zero());
            v[k] = T::one();
            continue;
        }
        v = gv;
        // ‖Gv‖ ≥ vᵀGv with equality exactly at eigenvectors
        if len - lambda <= stop * len {
            break;
        }
    }
    v
}

/// Which index range the sampled tensors use in every slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexRange {
    Full,
    /// Indices `1..=k` only, for the `(n−1) × k^d` rectangular case.
    Leading(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub median: f64,
    pub median_over_n: f64,
    /// Per-trial squared opnorm values in trial order.
    pub values: Vec<f64>,
}

/// Median squared opnorm of iid tensors with `n − 1` forms for each `n`.
pub fn opnorm_scaling(
    d: usize,
    n_list: &[usize],
    dist: &DistributionSpec,
    trials: usize,
    seeds: &SeedPolicy,
    opts: &OpnormOptions,
    range: IndexRange,
) -> Result<Vec<ScalingRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("n_list must be strictly ascending".into()));
    }
    if trials == 0 || d == 0 {
        return Err(Error::Argument("trials and d must be positive".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::Argument(format!("n must be ≥ 2, got {n}")));
            }
            let k = match range {
                IndexRange::Full => n,
                IndexRange::Leading(k) => k.clamp(1, n),
            };
            let entries = (n - 1) as u128 * (k as u128).pow(d as u32);
            if entries > crate::system::DEFAULT_ENTRY_CAP {
                return Err(Error::Allocation { requested: entries, cap: crate::system::DEFAULT_ENTRY_CAP });
            }
            let values: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut data = vec![0.0; entries as usize];
                    seeds.fill(dist, Purpose::Coefficients, t as u64, n as u64, &mut data);
                    let view = TensorView::new(n - 1, k, d, &data);
                    let o = OpnormOptions { stream: t as u64, ..*opts };
                    opnorm(view, &o).value
                })
                .collect();
            let median = crate::stats::median(&values);
            Ok(ScalingRow { n, d, k, median, median_over_n: median / n as f64, values })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemShape;

    #[test]
    fn zero_tensor() {
        let t = CoefficientTensor::<f64>::zeros(SystemShape::new(4, 2).unwrap()).unwrap();
        let r = opnorm_tensor(&t, &OpnormOptions::default());
        assert_eq!(r.value, 0.0);
        assert!(r.arg.iter().all(|v| (dot(v, v) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rank_one_closed_form() {
        let shape = SystemShape::new(4, 3).unwrap();
        let u = [0.6, 0.0, 0.8];
        let v = [0.5, -0.5, 0.5, 0.5];
        let t = CoefficientTensor::from_fn(shape, |l, idx| u[l] * idx.iter().map(|&i| v[i]).product::<f64>())
            .unwrap();
        let r = opnorm_tensor(&t, &OpnormOptions { restarts: 3, ..Default::default() });
        assert!((r.value - 1.0).abs() < 1e-10);
        for a in &r.arg {
            assert!((dot(a, &v).abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn history_is_monotone() {
        let shape = SystemShape::new(5, 3).unwrap();
        let t = crate::ensembles::sample_system(shape, &DistributionSpec::gaussian(), &SeedPolicy::new(3), 0)
            .unwrap();
        let r = opnorm_tensor(&t, &OpnormOptions { restarts: 1, ..Default::default() });
        for w in r.history.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
        assert!((objective(t.view(), &r.arg) - r.value).abs() <= 1e-10 * r.value);
    }

    #[test]
    fn f32_runs() {
        let shape = SystemShape::new(4, 2).unwrap();
        let t = crate::ensembles::sample_system(shape, &DistributionSpec::gaussian(), &SeedPolicy::new(3), 0)
            .unwrap();
        let a = opnorm_tensor(&t, &OpnormOptions::default()).value;
        let b = opnorm_tensor(&t.cast::<f32>(), &OpnormOptions::default()).value;
        assert!(((b as f64) - a).abs() < 1e-4 * a);
    }

    fn random_view_data(m: usize, n: usize, d: usize, seed: u64) -> Vec<f64> {
        SeedPolicy::new(seed).draws(&DistributionSpec::gaussian(), Purpose::Auxiliary, 0, 0, m * n.pow(d as u32))
    }

    #[test]
    fn linear_case_matches_svd() {
        let opts = OpnormOptions { restarts: 2, max_sweeps: 50, ..Default::default() };
        for seed in 0..10 {
            let data = random_view_data(20, 30, 1, seed);
            let r = opnorm(TensorView::new(20, 30, 1, &data), &opts);
            let smax = nalgebra::DMatrix::from_row_slice(20, 30, &data).singular_values().max();
            assert!((r.value - smax * smax).abs() < 1e-8 * smax * smax, "seed {seed}");
        }
    }

    #[test]
    fn sign_and_form_permutation_invariance() {
        let (m, n, d) = (3, 4, 3);
        let data = random_view_data(m, n, d, 21);
        let opts = OpnormOptions { restarts: 20, ..Default::default() };
        let base = opnorm(TensorView::new(m, n, d, &data), &opts).value;
        let block = n.pow(d as u32);
        // reverse the forms
        let mut perm = Vec::with_capacity(data.len());
        for l in (0..m).rev() {
            perm.extend_from_slice(&data[l * block..(l + 1) * block]);
        }
        let p = opnorm(TensorView::new(m, n, d, &perm), &opts).value;
        assert!((p - base).abs() < 1e-8 * base);
        // negate slot 1 (flip sign of entries whose second index is odd)
        let mut idx = vec![0usize; d];
        let neg: Vec<f64> = data
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                crate::system::unflatten(k % block, n, &mut idx);
                if idx[1] % 2 == 1 { -v } else { v }
            })
            .collect();
        let s = opnorm(TensorView::new(m, n, d, &neg), &opts).value;
        assert!((s - base).abs() < 1e-8 * base);
    }

    #[test]
    fn beats_every_basis_assignment() {
        let (m, n, d) = (4, 5, 3);
        let data = random_view_data(m, n, d, 22);
        let r = opnorm(TensorView::new(m, n, d, &data), &OpnormOptions::default());
        let block = n.pow(d as u32);
        for k in 0..block {
            let s: f64 = (0..m).map(|l| data[l * block + k].powi(2)).sum();
            assert!(r.value >= s * (1.0 - 1e-12));
        }
    }

    #[test]
    fn linear_scaling_near_matrix_edge() {
        let opts = OpnormOptions { restarts: 2, max_sweeps: 100, ..Default::default() };
        let rows = opnorm_scaling(1, &[8, 16, 32], &DistributionSpec::gaussian(), 15, &SeedPolicy::new(5), &opts, IndexRange::Full)
            .unwrap();
        for row in &rows {
            let (m, n) = ((row.n - 1) as f64, row.n as f64);
            let edge = (m.sqrt() + n.sqrt()).powi(2);
            assert!(row.median <= 2.0 * edge && row.median >= edge / 2.0, "{row:?}");
        }
        let again = opnorm_scaling(1, &[8, 16, 32], &DistributionSpec::gaussian(), 15, &SeedPolicy::new(5), &opts, IndexRange::Full)
            .unwrap();
        assert_eq!(rows, again);
        assert!(opnorm_scaling(1, &[8, 8], &DistributionSpec::gaussian(), 1, &SeedPolicy::new(5), &opts, IndexRange::Full).is_err());
    }

    #[test]
    fn leading_range_shrinks_value() {
        let opts = OpnormOptions { restarts: 5, ..Default::default() };
        let g = DistributionSpec::gaussian();
        let full = opnorm_scaling(2, &[8], &g, 5, &SeedPolicy::new(6), &opts, IndexRange::Full).unwrap();
        let lead = opnorm_scaling(2, &[8], &g, 5, &SeedPolicy::new(6), &opts, IndexRange::Leading(3)).unwrap();
        assert_eq!(lead[0].k, 3);
        assert!(lead[0].median < full[0].median);
    }
}
