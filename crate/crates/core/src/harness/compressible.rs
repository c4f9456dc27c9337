use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::ensembles::{DistributionSpec, Purpose, SeedPolicy};
use crate::error::{Error, Result};
use crate::geometry::CompressibilityParams;
use crate::scalar::{dot, norm, normalize};
use crate::stats::{median, Proportion};
use crate::system::PolynomialSystem;

/// Which supports the minimization starts from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMode {
    /// Every `⌈δn⌉`-subset, or `max_supports` random ones if there are more.
    All,
    /// One fixed support (the rectangular setting).
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibleOptions {
    pub params: CompressibilityParams,
    /// Threshold constant: a trial counts when `inf ‖f(x)‖² ≤ c_sparse·n`.
    pub c_sparse: f64,
    pub max_supports: usize,
    pub starts_per_support: usize,
    pub support: SupportMode,
}

impl CompressibleOptions {
    pub fn new(params: CompressibilityParams, c_sparse: f64) -> Self {
        Self { params, c_sparse, max_supports: 64, starts_per_support: 2, support: SupportMode::All }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibleResult {
    pub n: usize,
    pub d: usize,
    pub sparsity: usize,
    pub options: CompressibleOptions,
    /// Per-trial estimate of `inf ‖f(x)‖²/n` over the compressible starts.
    pub infimum: Vec<f64>,
    pub median_infimum: f64,
    /// Trials with `infimum ≤ c_sparse`.
    pub below: Proportion,
}

fn supports(n: usize, k: usize, opts: &CompressibleOptions, seeds: &SeedPolicy, trial: u64) -> Result<Vec<Vec<usize>>> {
    if let SupportMode::Fixed(s) = &opts.support {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != k || s.iter().any(|&i| i >= n) {
            return Err(Error::Argument(format!("fixed support must hold {k} distinct indices below {n}")));
        }
        return Ok(vec![s]);
    }
    let total = binomial(n, k);
    if total <= opts.max_supports as u128 {
        let mut out = Vec::new();
        let mut c: Vec<usize> = (0..k).collect();
        loop {
            out.push(c.clone());
            // next combination in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| c[i] != i + n - k) else { break };
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
        }
        return Ok(out);
    }
    Ok((0..opts.max_supports as u64)
        .map(|s| {
            // partial Fisher–Yates on uniform draws
            let u = seeds.uniforms(Purpose::Compressible, trial, s | 1 << 40, k);
            let mut pool: Vec<usize> = (0..n).collect();
            for (i, &ui) in u.iter().enumerate() {
                let j = i + ((ui * (n - i) as f64) as usize).min(n - i - 1);
                pool.swap(i, j);
            }
            let mut sup = pool[..k].to_vec();
            sup.sort_unstable();
            sup
        })
        .collect())
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn support_key(s: &[usize]) -> u64 {
    s.iter().fold(0x243f_6a88_85a3_08d3u64, |h, &i| {
        (h ^ i as u64).wrapping_mul(0x1000_0000_01b3).rotate_left(17)
    })
}

/// Keeps `x` on the unit sphere within distance `ρ` of the support.
fn project(x: &mut [f64], mask: &[bool], rho: f64) {
    normalize(x);
    let off: f64 = x.iter().zip(mask).filter(|(_, &m)| !m).map(|(v, _)| v * v).sum::<f64>().sqrt();
    if off > rho {
        let on = (1.0 - off * off).sqrt();
        let target_on = (1.0 - rho * rho).sqrt();
        for (v, &m) in x.iter_mut().zip(mask) {
            if m {
                if on > 0.0 {
                    *v *= target_on / on;
                }
            } else {
                *v *= rho / off;
            }
        }
        normalize(x);
    }
}

fn sq_norm_f(sys: &PolynomialSystem<f64>, x: &[f64]) -> f64 {
    let f = sys.eval_unchecked(x);
    dot(&f, &f)
}

fn descend_on_support(sys: &PolynomialSystem<f64>, mut x: Vec<f64>, mask: &[bool], rho: f64, iters: usize, tol: f64) -> f64 {
    project(&mut x, mask, rho);
    let mut value = sq_norm_f(sys, &x);
    for _ in 0..iters {
        if value == 0.0 {
            break;
        }
        let f = sys.eval_unchecked(&x);
        let mut g: Vec<f64> = sys.jacobian_unchecked(&x).tr_mul_vec(&f).into_iter().map(|v| 2.0 * v).collect();
        let radial = dot(&g, &x);
        g.iter_mut().zip(&x).for_each(|(gi, &xi)| *gi -= radial * xi);
        let gn = norm(&g);
        let mut t = 0.1;
        let mut moved = false;
        while t * gn >= tol {
            let mut cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            project(&mut cand, mask, rho);
            let cv = sq_norm_f(sys, &cand);
            if cv < value {
                x = cand;
                value = cv;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    value
}

/// Estimate of `inf ‖f(x)‖²/n` over compressible unit vectors for one system.
pub fn compressible_infimum(
    sys: &PolynomialSystem<f64>,
    opts: &CompressibleOptions,
    seeds: &SeedPolicy,
    trial: u64,
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    opts.params.validate()?;
    let n = sys.shape().n();
    let k = opts.params.sparsity(n);
    let rho = opts.params.rho;
    let gauss = DistributionSpec::gaussian();
    let mut best = f64::INFINITY;
    for sup in supports(n, k, opts, seeds, trial)? {
        let mut mask = vec![false; n];
        sup.iter().for_each(|&i| mask[i] = true);
        let key = support_key(&sup);
        for s in 0..opts.starts_per_support as u64 {
            let g = seeds.draws(&gauss, Purpose::Compressible, trial, key ^ s, n);
            // on-support direction plus a small off-support component
            let mut on: Vec<f64> = g.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
            let mut off: Vec<f64> = g.iter().zip(&mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
            normalize(&mut on);
            normalize(&mut off);
            let x: Vec<f64> = on.iter().zip(&off).map(|(a, b)| a + 0.5 * rho * b).collect();
            best = best.min(descend_on_support(sys, x, &mask, rho, max_iters, tol));
        }
    }
    Ok(best / n as f64)
}

/// Per-trial compressible infimum and the frequency of `≤ c_sparse`.
pub fn run_compressible_infimum(cfg: &ExperimentConfig, opts: &CompressibleOptions) -> Result<CompressibleResult> {
    cfg.validate()?;
    let det = cfg.load_det()?;
    let infimum = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let sys = cfg.trial_system(det.as_ref(), t)?;
            compressible_infimum(&sys, opts, &cfg.seeds, t, cfg.optimizer.max_iters, cfg.optimizer.tol)
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = infimum.iter().filter(|&&v| v <= opts.c_sparse).count() as u64;
    Ok(CompressibleResult {
        n: cfg.shape.n(),
        d: cfg.shape.d(),
        sparsity: opts.params.sparsity(cfg.shape.n()),
        options: opts.clone(),
        median_infimum: median(&infimum),
        below: Proportion::new(hits, infimum.len() as u64),
        infimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_lexicographically() {
        let opts = CompressibleOptions::new(CompressibilityParams::new(0.5, 0.1).unwrap(), 0.01);
        let s = supports(4, 2, &opts, &SeedPolicy::new(0), 0).unwrap();
        assert_eq!(s, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(binomial(10, 3), 120);
    }

    #[test]
    fn sampled_supports_are_valid() {
        let mut opts = CompressibleOptions::new(CompressibilityParams::new(0.5, 0.1).unwrap(), 0.01);
        opts.max_supports = 5;
        let s = supports(12, 6, &opts, &SeedPolicy::new(0), 3).unwrap();
        assert_eq!(s.len(), 5);
        for sup in s {
            assert_eq!(sup.len(), 6);
            assert!(sup.windows(2).all(|w| w[0] < w[1]) && sup[5] < 12);
        }
    }

    #[test]
    fn projection_stays_feasible() {
        let mask = [true, false, false, false];
        let mut x = vec![0.2, 0.9, -0.3, 0.1];
        project(&mut x, &mask, 0.1);
        assert!((norm(&x) - 1.0).abs() < 1e-12);
        let off: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(off <= 0.1 + 1e-12);
    }
}
