use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Model};
use crate::condition::l_min_with;
use crate::ensembles::{DistributionSpec, SeedPolicy};
use crate::error::Result;
use crate::stats::Proportion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMetadata {
    pub n: usize,
    pub d: usize,
    pub dist: DistributionSpec,
    pub model: Model,
    pub seeds: SeedPolicy,
    /// `d^{n−1}`
    pub bezout: f64,
    /// `(n−1)·binom(n−1+d, d)`
    pub monomial_count: f64,
    pub perturbed: bool,
    pub note: String,
}

/// Empirical `P(L ≤ ε)` over an ε grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub eps_grid: Vec<f64>,
    pub hits: Vec<u64>,
    pub trials: u64,
    pub estimate: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Best `L` found in each trial, in trial order.
    pub l_min: Vec<f64>,
    pub metadata: TailMetadata,
}

impl TailCurve {
    /// Bins per-trial minima against the grid.
    pub fn from_values(eps_grid: Vec<f64>, l_min: Vec<f64>, metadata: TailMetadata) -> Self {
        let trials = l_min.len() as u64;
        let props: Vec<Proportion> = eps_grid
            .iter()
            .map(|&e| Proportion::new(l_min.iter().filter(|&&v| v <= e).count() as u64, trials))
            .collect();
        Self {
            hits: props.iter().map(|p| p.hits).collect(),
            estimate: props.iter().map(|p| p.estimate).collect(),
            ci_low: props.iter().map(|p| p.ci_low).collect(),
            ci_high: props.iter().map(|p| p.ci_high).collect(),
            eps_grid,
            trials,
            l_min,
            metadata,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.hits.windows(2).all(|w| w[0] <= w[1]) && self.hits.iter().all(|&h| h <= self.trials)
    }
}

/// Samples `cfg.trials` systems, minimizes `L` on each and bins the minima.
pub fn run_tail(cfg: &ExperimentConfig) -> Result<TailCurve> {
    cfg.validate()?;
    let det = cfg.load_det()?;
    let l_min = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let sys = cfg.trial_system(det.as_ref(), t)?;
            Ok(l_min_with(&sys, &cfg.lmin_options(t)).value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let metadata = TailMetadata {
        n: cfg.shape.n(),
        d: cfg.shape.d(),
        dist: cfg.dist.clone(),
        model: cfg.model,
        seeds: cfg.seeds,
        bezout: cfg.shape.bezout(),
        monomial_count: cfg.shape.monomial_count_total(),
        perturbed: det.is_some(),
        note: "moderate-eps regime: only the linear-in-eps shape of the tail is observable; \
               the bound is informative only for eps below d^(-9n/4)"
            .into(),
    };
    Ok(TailCurve::from_values(cfg.eps_grid.clone(), l_min, metadata))
}
