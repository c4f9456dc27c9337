//! Coefficient laws, seed streams, and the Kostlan–Shub–Smale model.
//!
//! Every random draw in the crate goes through a [`SeedPolicy`]: the master
//! seed keys a ChaCha8 generator, and `(purpose, trial, sub)` selects one of
//! its 2⁶⁴ independent streams. Inside a stream, coefficient entry `e`
//! occupies the fixed 32-bit word window `[4e, 4e + 4)`, so any entry can be
//! regenerated on its own and a tensor is identical however it is filled.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opnorm::{opnorm, OpnormOptions};
use crate::system::{
    multinomial, sorted_multi_indices, symmetrize, unflatten, CoefficientTensor, PolynomialSystem,
    SystemShape,
};

/// Finite-support law given by atoms and their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Gaussian,
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformPm,
    Table,
}

const MOMENT_TOL: f64 = 1e-12;

/// A standardized (mean 0, variance 1) coefficient law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DistributionSpec {
    kind: DistributionKind,
    table: Option<Table>,
    /// Subgaussian tail parameter; carried for reporting only.
    t0: f64,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    kind: DistributionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t0: Option<f64>,
}

impl TryFrom<RawDistribution> for DistributionSpec {
    type Error = Error;
    fn try_from(raw: RawDistribution) -> Result<Self> {
        let mut spec = match (raw.kind, raw.table) {
            (DistributionKind::Table, Some(t)) => DistributionSpec::table(t.values, t.probs)?,
            (DistributionKind::Table, None) => {
                return Err(Error::Config("table distribution needs a `table` field".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Config("`table` is only valid with kind = \"table\"".into()))
            }
            (DistributionKind::Gaussian, None) => DistributionSpec::gaussian(),
            (DistributionKind::Rademacher, None) => DistributionSpec::rademacher(),
            (DistributionKind::UniformPm, None) => DistributionSpec::uniform_pm(),
        };
        if let Some(t0) = raw.t0 {
            if !(t0 > 0.0) {
                return Err(Error::Config(format!("t0 must be positive, got {t0}")));
            }
            spec.t0 = t0;
        }
        Ok(spec)
    }
}

impl From<DistributionSpec> for RawDistribution {
    fn from(d: DistributionSpec) -> Self {
        RawDistribution { kind: d.kind, table: d.table, t0: Some(d.t0) }
    }
}

impl DistributionSpec {
    pub fn gaussian() -> Self {
        Self { kind: DistributionKind::Gaussian, table: None, t0: 2.0, cumulative: vec![] }
    }

    pub fn rademacher() -> Self {
        Self { kind: DistributionKind::Rademacher, table: None, t0: 1.0, cumulative: vec![] }
    }

    pub fn uniform_pm() -> Self {
        Self { kind: DistributionKind::UniformPm, table: None, t0: 1.0, cumulative: vec![] }
    }

    /// Validates exact standardization of the table (mean 0, variance 1).
    pub fn table(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::Config("table needs matching non-empty values/probs".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("table probabilities must be ≥ 0 and values finite".into()));
        }
        let total: f64 = probs.iter().sum();
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let var: f64 = values.iter().zip(&probs).map(|(v, p)| v * v * p).sum::<f64>() - mean * mean;
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Config(format!("table probabilities sum to {total}")));
        }
        if mean.abs() > MOMENT_TOL || (var - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Config(format!(
                "table must have mean 0 and variance 1, got mean {mean}, variance {var}"
            )));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let max = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            kind: DistributionKind::Table,
            table: Some(Table { values, probs }),
            t0: max * max,
            cumulative,
        })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Exact mean and variance of the law.
    pub fn moments(&self) -> (f64, f64) {
        match &self.table {
            Some(t) => {
                let mean: f64 = t.values.iter().zip(&t.probs).map(|(v, p)| v * p).sum();
                let second: f64 = t.values.iter().zip(&t.probs).map(|(v, p)| v * v * p).sum();
                (mean, second - mean * mean)
            }
            None => (0.0, 1.0),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.table {
            None => true,
            Some(t) => {
                let mut pairs: Vec<(f64, f64)> =
                    t.values.iter().copied().zip(t.probs.iter().copied()).collect();
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let k = pairs.len();
                (0..k).all(|i| {
                    let (a, b) = (pairs[i], pairs[k - 1 - i]);
                    (a.0 + b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
                })
            }
        }
    }

    /// Maps one 128-bit entry window to a draw.
    pub fn draw(&self, w0: u64, w1: u64) -> f64 {
        match self.kind {
            DistributionKind::Gaussian => {
                // Box–Muller; u1 ∈ (0, 1] keeps the log finite.
                let u1 = ((w0 >> 11) + 1) as f64 * UNIT;
                let u2 = (w1 >> 11) as f64 * UNIT;
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
            DistributionKind::Rademacher => {
                if w0 >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionKind::UniformPm => {
                let u = (w0 >> 11) as f64 * UNIT;
                3f64.sqrt() * (2.0 * u - 1.0)
            }
            DistributionKind::Table => {
                let u = (w0 >> 11) as f64 * UNIT;
                let t = self.table.as_ref().expect("table kind has table");
                let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(t.values.len() - 1);
                t.values[i]
            }
        }
    }
}

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// What a stream is used for; keeps unrelated draws from sharing words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Coefficients = 1,
    Deterministic = 2,
    Kss = 3,
    Restart = 4,
    Opnorm = 5,
    Growth = 6,
    SmallBall = 7,
    Tensorization = 8,
    Compressible = 9,
    Plant = 10,
    Perturbation = 11,
    Witness = 12,
    Auxiliary = 13,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        Self { master_seed: 0x5eed_0f_c0de }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Stream identifier for `(purpose, trial, sub)`.
    pub fn stream_id(purpose: Purpose, trial: u64, sub: u64) -> u64 {
        splitmix(splitmix(splitmix(purpose as u64) ^ trial) ^ sub)
    }

    pub fn stream(&self, purpose: Purpose, trial: u64, sub: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(Self::stream_id(purpose, trial, sub));
        rng
    }

    /// Draws entry `e` of a stream directly, without touching earlier words.
    pub fn entry(&self, dist: &DistributionSpec, purpose: Purpose, trial: u64, sub: u64, e: u64) -> f64 {
        let mut rng = self.stream(purpose, trial, sub);
        rng.set_word_pos(4 * e as u128);
        let (w0, w1) = (rng.next_u64(), rng.next_u64());
        dist.draw(w0, w1)
    }

    /// Fills `out` with entries `0..out.len()` of a stream.
    pub fn fill(&self, dist: &DistributionSpec, purpose: Purpose, trial: u64, sub: u64, out: &mut [f64]) {
        let mut rng = self.stream(purpose, trial, sub);
        for v in out.iter_mut() {
            let (w0, w1) = (rng.next_u64(), rng.next_u64());
            *v = dist.draw(w0, w1);
        }
    }

    /// `count` fresh draws.
    pub fn draws(&self, dist: &DistributionSpec, purpose: Purpose, trial: u64, sub: u64, count: usize) -> Vec<f64> {
        let mut v = vec![0.0; count];
        self.fill(dist, purpose, trial, sub, &mut v);
        v
    }

    /// Uniform draws in `[0, 1)`, one per 128-bit window.
    pub fn uniforms(&self, purpose: Purpose, trial: u64, sub: u64, count: usize) -> Vec<f64> {
        let mut rng = self.stream(purpose, trial, sub);
        (0..count)
            .map(|_| {
                let w0 = rng.next_u64();
                let _ = rng.next_u64();
                (w0 >> 11) as f64 * UNIT
            })
            .collect()
    }
}

/// iid coefficient tensor for one trial.
pub fn sample_system(
    shape: SystemShape,
    dist: &DistributionSpec,
    seeds: &SeedPolicy,
    trial: u64,
) -> Result<CoefficientTensor<f64>> {
    sample_tensor(shape, dist, seeds, Purpose::Coefficients, trial)
}

pub fn sample_tensor(
    shape: SystemShape,
    dist: &DistributionSpec,
    seeds: &SeedPolicy,
    purpose: Purpose,
    trial: u64,
) -> Result<CoefficientTensor<f64>> {
    shape.ensure_within(crate::system::DEFAULT_ENTRY_CAP)?;
    let mut data = vec![0.0; shape.entries() as usize];
    seeds.fill(dist, purpose, trial, 0, &mut data);
    CoefficientTensor::from_data(shape, data)
}

/// A KSS system with the standard Gaussians `ξ_α` it was built from.
#[derive(Debug, Clone)]
pub struct KssSample {
    pub system: PolynomialSystem<f64>,
    /// `xi[l][k]` belongs to monomial `sorted_multi_indices(n, d)[k]`.
    pub xi: Vec<Vec<f64>>,
}

/// Kostlan–Shub–Smale system: monomial coefficient `c_α = √binom(d,α) ξ_α`,
/// spread equally over the orderings of α.
pub fn make_kss(shape: SystemShape, seeds: &SeedPolicy, trial: u64) -> Result<KssSample> {
    let (n, d, m) = (shape.n(), shape.d(), shape.m());
    let keys = sorted_multi_indices(n, d);
    let all = seeds.draws(&DistributionSpec::gaussian(), Purpose::Kss, trial, 0, m * keys.len());
    let xi: Vec<Vec<f64>> = all.chunks(keys.len()).map(<[f64]>::to_vec).collect();
    // per-key entry value ξ_α / √binom
    let key_pos: std::collections::HashMap<&[usize], usize> =
        keys.iter().enumerate().map(|(i, k)| (k.as_slice(), i)).collect();
    let weights: Vec<f64> = keys.iter().map(|k| (multinomial(k) as f64).sqrt()).collect();
    let block = n.pow(d as u32);
    let mut idx = vec![0usize; d];
    let slot_key: Vec<usize> = (0..block)
        .map(|flat| {
            unflatten(flat, n, &mut idx);
            idx.sort_unstable();
            key_pos[idx.as_slice()]
        })
        .collect();
    let mut data = vec![0.0; m * block];
    for l in 0..m {
        for flat in 0..block {
            let k = slot_key[flat];
            data[l * block + flat] = xi[l][k] / weights[k];
        }
    }
    let rand = CoefficientTensor::from_data(shape, data)?;
    Ok(KssSample { system: PolynomialSystem::homogeneous(rand), xi })
}

/// Lower-bound test of γ-control for a deterministic part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma: f64,
    /// Estimated `sup ‖D⁽ᵏ⁾_{x,det}(y₁, …, y_k)‖²` for `k = 0, …, d`.
    pub sup_estimates: Vec<f64>,
    pub threshold: f64,
    /// No violation found (all estimates ≤ `n^γ`).
    pub passed: bool,
}

/// Estimates the γ-control suprema of `det` by alternating maximization.
///
/// `D⁽ᵏ⁾_x(y₁, …, y_k) = d!/(d−k)! · S(x, …, x, y₁, …, y_k)` where `S` is the
/// symmetrization of `det`, and a symmetric multilinear map attains the same
/// supremum with repeated or independent unit arguments. Every estimate is
/// therefore `(d!/(d−k)!)²` times one alternating-maximization value on `S`,
/// and inherits its lower-bound property.
pub fn gamma_control_estimate(
    det: &CoefficientTensor<f64>,
    gamma: f64,
    restarts: usize,
    sweeps: usize,
) -> Result<GammaReport> {
    gamma_control_estimate_seeded(det, gamma, restarts, sweeps, &SeedPolicy::default())
}

pub fn gamma_control_estimate_seeded(
    det: &CoefficientTensor<f64>,
    gamma: f64,
    restarts: usize,
    sweeps: usize,
    seeds: &SeedPolicy,
) -> Result<GammaReport> {
    if restarts == 0 {
        return Err(Error::Argument("restarts must be ≥ 1".into()));
    }
    let shape = det.shape();
    let d = shape.d();
    let sym = symmetrize(det);
    let opts = OpnormOptions { restarts, max_sweeps: sweeps, tol: 1e-12, seeds: *seeds, stream: 0 };
    let base = opnorm(sym.view(), &opts).value;
    let mut falling = 1.0f64;
    let mut sup_estimates = Vec::with_capacity(d + 1);
    for k in 0..=d {
        sup_estimates.push(falling * falling * base);
        falling *= (d - k) as f64;
    }
    let threshold = (shape.n() as f64).powf(gamma);
    let passed = sup_estimates.iter().all(|&s| s <= threshold);
    Ok(GammaReport { gamma, sup_estimates, threshold, passed })
}
