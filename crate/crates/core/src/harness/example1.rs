use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condition::sigma_min_tangent;
use crate::ensembles::{sample_system, DistributionSpec, SeedPolicy};
use crate::error::{Error, Result};
use crate::stats::Proportion;
use crate::system::{PolynomialSystem, SystemShape};

/// Rademacher quadrics at `x₀ = (1, 1, 0, …, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Result {
    pub n: usize,
    /// `f(x₀) = 0`, tested in exact integer arithmetic.
    pub p_f_zero: Proportion,
    /// `f(x₀) = 0` and the tangent Jacobian at `x₀/‖x₀‖` is singular
    /// (`σ_min < 1e−10`).
    pub p_joint: Proportion,
    /// Per-form frequency of `f_l(x₀) = 0` over all `trials·(n−1)` forms.
    pub p_form_zero: Proportion,
    /// `(3/8)^{n−1}`
    pub exact_p_f_zero: f64,
    pub exact_p_form_zero: f64,
}

/// Each `f_l(x₀)` is the sum of the four signs `a_{l,ij}`, `i, j ∈ {1, 2}`,
/// which vanishes with probability `binom(4, 2)/2⁴ = 3/8`; the forms are
/// independent.
pub fn run_example1(n: usize, trials: usize, seeds: &SeedPolicy) -> Result<Example1Result> {
    if n < 3 {
        return Err(Error::Argument(format!("the example needs n ≥ 3, got {n}")));
    }
    let shape = SystemShape::new(n, 2)?;
    let dist = DistributionSpec::rademacher();
    let x0: Vec<f64> = (0..n).map(|i| if i < 2 { std::f64::consts::FRAC_1_SQRT_2 } else { 0.0 }).collect();
    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let tensor = sample_system(shape, &dist, seeds, t)?;
            let mut zero_forms = 0u64;
            for l in 0..shape.m() {
                let mut sum = 0i64;
                for i in 0..2 {
                    for j in 0..2 {
                        sum += tensor.get(l, &[i, j]) as i64;
                    }
                }
                zero_forms += u64::from(sum == 0);
            }
            let all_zero = zero_forms == shape.m() as u64;
            let joint = all_zero && {
                let sys = PolynomialSystem::homogeneous(tensor);
                sigma_min_tangent(&sys, &x0)? < 1e-10
            };
            Ok((zero_forms, all_zero, joint))
        })
        .collect::<Result<Vec<_>>>()?;
    let trials = trials as u64;
    let zero_forms: u64 = per_trial.iter().map(|r| r.0).sum();
    let f_zero = per_trial.iter().filter(|r| r.1).count() as u64;
    let joint = per_trial.iter().filter(|r| r.2).count() as u64;
    Ok(Example1Result {
        n,
        p_f_zero: Proportion::new(f_zero, trials),
        p_joint: Proportion::new(joint, trials),
        p_form_zero: Proportion::new(zero_forms, trials * shape.m() as u64),
        exact_p_f_zero: 0.375f64.powi(n as i32 - 1),
        exact_p_form_zero: 0.375,
    })
}
