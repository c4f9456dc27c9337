//! Sparse, compressible and incompressible unit vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries below this magnitude count as zero.
pub const ZERO_ENTRY: f64 = 1e-12;

pub const DEFAULT_KAPPA0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressibilityParams {
    pub delta: f64,
    pub rho: f64,
    /// Constant behind the default rule, reported alongside results.
    pub kappa0: Option<f64>,
}

impl CompressibilityParams {
    pub fn new(delta: f64, rho: f64) -> Result<Self> {
        let p = Self { delta, rho, kappa0: None };
        p.validate()?;
        Ok(p)
    }

    /// `δ = ρ = κ₀/d²`.
    pub fn from_rule(kappa0: f64, d: usize) -> Result<Self> {
        if !(kappa0 > 0.0) || d == 0 {
            return Err(Error::Argument(format!("invalid κ₀ = {kappa0} or d = {d}")));
        }
        let v = kappa0 / (d * d) as f64;
        let p = Self { delta: v, rho: v, kappa0: Some(kappa0) };
        p.validate()?;
        Ok(p)
    }

    /// The rule with `κ₀ = 0.1`.
    pub fn default_for_degree(d: usize) -> Self {
        Self::from_rule(DEFAULT_KAPPA0, d).expect("default κ₀ is admissible")
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |v: f64| v > 0.0 && v < 1.0;
        if inside(self.delta) && inside(self.rho) {
            Ok(())
        } else {
            Err(Error::Argument(format!("δ and ρ must lie in (0, 1), got {} and {}", self.delta, self.rho)))
        }
    }

    /// `⌈δn⌉`, the sparsity level.
    pub fn sparsity(&self, n: usize) -> usize {
        // shave roundoff so that e.g. δn = 2.0000000000000004 still gives 2
        let k = (self.delta * n as f64 * (1.0 - 1e-12)).ceil() as usize;
        k.clamp(1, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorClass {
    Sparse,
    Compressible,
    Incompressible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibilityReport {
    pub class: VectorClass,
    pub dist_to_sparse: f64,
    /// Present exactly for incompressible vectors.
    pub spread_set: Option<Vec<usize>>,
}

fn check_unit(x: &[f64]) -> Result<()> {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (nx - 1.0).abs() > 1e-10 {
        return Err(Error::Contract(format!("expected a unit vector, got norm {nx}")));
    }
    Ok(())
}

/// Indices of the `k` largest-magnitude entries (ties by lower index).
fn top_k(x: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Distance from `x` to the nearest `k`-sparse vector, and whether `x` is
/// itself `k`-sparse up to [`ZERO_ENTRY`].
fn sparse_distance(x: &[f64], k: usize) -> (f64, bool) {
    let keep = top_k(x, k);
    let mut mask = vec![false; x.len()];
    keep.iter().for_each(|&i| mask[i] = true);
    let rest = x.iter().zip(&mask).filter(|(_, &m)| !m).map(|(v, _)| *v);
    let (mut sq, mut sparse) = (0.0, true);
    for v in rest {
        sq += v * v;
        sparse &= v.abs() < ZERO_ENTRY;
    }
    (sq.sqrt(), sparse)
}

pub fn classify(x: &[f64], p: &CompressibilityParams) -> Result<CompressibilityReport> {
    p.validate()?;
    check_unit(x)?;
    let k = p.sparsity(x.len());
    let (dist, sparse) = sparse_distance(x, k);
    let class = if sparse {
        VectorClass::Sparse
    } else if dist <= p.rho {
        VectorClass::Compressible
    } else {
        VectorClass::Incompressible
    };
    let spread_set = match class {
        VectorClass::Incompressible => Some(checked_band(x, p)?),
        _ => None,
    };
    Ok(CompressibilityReport { class, dist_to_sparse: dist, spread_set })
}

/// The band `{k : ρ/√(2n) ≤ |x_k| ≤ 1/√(δn)}` of an incompressible vector.
///
/// Fails with an invariant error if the band holds fewer than `ρ²δn/2`
/// indices, which an incompressible vector cannot do.
pub fn spread_set(x: &[f64], p: &CompressibilityParams) -> Result<Vec<usize>> {
    let report = classify(x, p)?;
    report.spread_set.ok_or_else(|| {
        Error::Precondition(format!("spread set needs an incompressible vector, got {:?}", report.class))
    })
}

/// Lower and upper band edges for dimension `n`.
pub fn band(n: usize, p: &CompressibilityParams) -> (f64, f64) {
    let nf = n as f64;
    (p.rho / (2.0 * nf).sqrt(), 1.0 / (p.delta * nf).sqrt())
}

fn checked_band(x: &[f64], p: &CompressibilityParams) -> Result<Vec<usize>> {
    let n = x.len();
    let (lo, hi) = band(n, p);
    let sigma: Vec<usize> = (0..n).filter(|&k| lo <= x[k].abs() && x[k].abs() <= hi).collect();
    let need = p.rho * p.rho * p.delta * n as f64 / 2.0;
    if (sigma.len() as f64) < need {
        return Err(Error::Invariant(format!(
            "spread set has {} indices, fewer than ρ²δn/2 = {need}",
            sigma.len()
        )));
    }
    Ok(sigma)
}
