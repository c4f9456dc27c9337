use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::condition::LMinOptions;
use crate::ensembles::{
    gamma_control_estimate_seeded, make_kss, sample_system, DistributionKind, DistributionSpec, SeedPolicy,
};
use crate::error::{Error, Result};
use crate::system::io::read_tensor_auto;
use crate::system::{CoefficientTensor, PolynomialSystem, SystemShape};

/// How the random part is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// iid entries of the unsymmetrized tensor.
    #[default]
    Iid,
    /// Kostlan–Shub–Smale, Gaussian only.
    Kss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerKnobs {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for OptimizerKnobs {
    fn default() -> Self {
        Self { restarts: 8, max_iters: 100, tol: 1e-12 }
    }
}

/// Settings for the γ-control check applied to a deterministic part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaCheck {
    pub gamma: f64,
    pub restarts: usize,
    pub sweeps: usize,
}

impl Default for GammaCheck {
    fn default() -> Self {
        Self { gamma: 19.0 / 18.0, restarts: 50, sweeps: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub shape: SystemShape,
    #[serde(default = "DistributionSpec::gaussian")]
    pub dist: DistributionSpec,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub det_source: Option<PathBuf>,
    #[serde(default)]
    pub gamma_check: GammaCheck,
    #[serde(flatten)]
    pub seeds: SeedPolicy,
    pub trials: usize,
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub optimizer: OptimizerKnobs,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(shape: SystemShape, trials: usize, eps_grid: Vec<f64>, seeds: SeedPolicy) -> Self {
        Self {
            shape,
            dist: DistributionSpec::gaussian(),
            model: Model::Iid,
            det_source: None,
            gamma_check: GammaCheck::default(),
            seeds,
            trials,
            eps_grid,
            optimizer: OptimizerKnobs::default(),
            output: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0)) || self.eps_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("eps_grid must be positive and strictly ascending".into()));
        }
        if self.optimizer.restarts == 0 {
            return Err(Error::Config("optimizer.restarts must be ≥ 1".into()));
        }
        if self.model == Model::Kss && self.dist.kind() != DistributionKind::Gaussian {
            return Err(Error::Config("the KSS model is Gaussian; set dist.kind = \"gaussian\"".into()));
        }
        Ok(())
    }

    /// Loads the deterministic part, if any, and runs the γ-control check.
    pub fn load_det(&self) -> Result<Option<CoefficientTensor<f64>>> {
        let Some(path) = &self.det_source else { return Ok(None) };
        let det = read_tensor_auto(path)?;
        if det.shape() != self.shape {
            return Err(Error::Config(format!(
                "deterministic part has n = {}, d = {} but the config asks for n = {}, d = {}",
                det.shape().n(),
                det.shape().d(),
                self.shape.n(),
                self.shape.d()
            )));
        }
        let g = self.gamma_check;
        let report = gamma_control_estimate_seeded(&det, g.gamma, g.restarts, g.sweeps, &self.seeds)?;
        if !report.passed {
            return Err(Error::GammaControl(Box::new(report)));
        }
        Ok(Some(det))
    }

    /// The system of trial `t`.
    pub fn trial_system(&self, det: Option<&CoefficientTensor<f64>>, t: u64) -> Result<PolynomialSystem<f64>> {
        let rand = match self.model {
            Model::Iid => sample_system(self.shape, &self.dist, &self.seeds, t)?,
            Model::Kss => make_kss(self.shape, &self.seeds, t)?.system.rand().clone(),
        };
        PolynomialSystem::new(rand, det.cloned())
    }

    pub fn lmin_options(&self, t: u64) -> LMinOptions {
        LMinOptions {
            restarts: self.optimizer.restarts,
            max_iters: self.optimizer.max_iters,
            tol: self.optimizer.tol,
            seeds: self.seeds,
            stream: t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_json() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"shape": {"n": 4, "d": 2}, "dist": {"kind": "rademacher"}, "master_seed": 7,
                "trials": 10, "eps_grid": [0.01, 0.1]}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seeds.master_seed, 7);
        assert_eq!(cfg.model, Model::Iid);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_grid_and_kss_mismatch() {
        let mut cfg = ExperimentConfig::new(SystemShape::new(3, 2).unwrap(), 5, vec![0.1, 0.01], SeedPolicy::new(1));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.eps_grid = vec![0.01, 0.1];
        cfg.validate().unwrap();
        cfg.model = Model::Kss;
        cfg.dist = DistributionSpec::rademacher();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
