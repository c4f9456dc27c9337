use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::condition::{
    descend, double_root_residual, gauss_newton, l_min_with, root_near, sigma_min_tangent, start_pair,
    LMinOptions, PairObjective, UnitPair,
};
use crate::ensembles::Purpose;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::norm;
use crate::stats::Proportion;
use crate::system::PolynomialSystem;

/// What counts as an exact zero for witnessed equalities.
const EXACT_ZERO: f64 = 1e-12;
const POLISH_ITERS: usize = 40;

/// Per-trial outcome of the witness search. Each `Option` is the smallest
/// ε at which the search found a witness for that event (`None`: no
/// witness at any ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventCriticals {
    /// `f(x) = 0 ∧ D_x(y) = 0`
    pub double_root: bool,
    /// `f(x) = 0 ∧ ‖D_x(y)‖ ≤ d^{9/4}√n ε`
    pub regular_root: Option<f64>,
    /// `D_x(y) = 0 ∧ ‖f(x)‖ ≤ d^{9/8}n^{1/4} ε²`
    pub critical_value: Option<f64>,
    /// `‖f(x)‖, ‖f(y)‖ ≤ (d^{9/2}n)^{1/4} ε`
    pub simultaneous: Option<f64>,
}

/// Hit frequencies of the witness search. Missed witnesses only lower the
/// counts, so every estimate is a lower bound on the probability that a
/// witness exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimates {
    pub eps_grid: Vec<f64>,
    pub trials: u64,
    pub double_root: Proportion,
    pub regular_root: Vec<Proportion>,
    pub critical_value: Vec<Proportion>,
    pub simultaneous: Vec<Proportion>,
    pub criticals: Vec<EventCriticals>,
}

impl EventEstimates {
    pub fn from_criticals(eps_grid: Vec<f64>, criticals: Vec<EventCriticals>) -> Self {
        let trials = criticals.len() as u64;
        let curve = |pick: fn(&EventCriticals) -> Option<f64>| -> Vec<Proportion> {
            eps_grid
                .iter()
                .map(|&e| {
                    let hits = criticals.iter().filter(|c| pick(c).is_some_and(|v| v <= e)).count();
                    Proportion::new(hits as u64, trials)
                })
                .collect()
        };
        Self {
            double_root: Proportion::new(criticals.iter().filter(|c| c.double_root).count() as u64, trials),
            regular_root: curve(|c| c.regular_root),
            critical_value: curve(|c| c.critical_value),
            simultaneous: curve(|c| c.simultaneous),
            eps_grid,
            trials,
            criticals,
        }
    }
}

/// `‖f(x)‖² + ‖f(y)‖²`
struct Simultaneous<'a> {
    sys: &'a PolynomialSystem<f64>,
}

impl PairObjective<f64> for Simultaneous<'_> {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let (fx, fy) = (self.sys.eval_unchecked(x), self.sys.eval_unchecked(y));
        fx.iter().chain(&fy).map(|v| v * v).sum()
    }

    fn gradient(&self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let (fx, fy) = (self.sys.eval_unchecked(x), self.sys.eval_unchecked(y));
        let gx = self.sys.jacobian_unchecked(x).tr_mul_vec(&fx).into_iter().map(|v| 2.0 * v).collect();
        let gy = self.sys.jacobian_unchecked(y).tr_mul_vec(&fy).into_iter().map(|v| 2.0 * v).collect();
        (fx.iter().chain(&fy).map(|v| v * v).sum(), gx, gy)
    }
}

fn simultaneous_residual(sys: &PolynomialSystem<f64>, x: &[f64], y: &[f64]) -> (Vec<f64>, Matrix<f64>) {
    let n = x.len();
    let m = n - 1;
    let (jx, jy) = (sys.jacobian_unchecked(x), sys.jacobian_unchecked(y));
    let mut r = sys.eval_unchecked(x);
    r.extend(sys.eval_unchecked(y));
    let mut a = Matrix::zeros(2 * m, 2 * n);
    for l in 0..m {
        for i in 0..n {
            a[(l, i)] = jx[(l, i)];
            a[(m + l, n + i)] = jy[(l, i)];
        }
    }
    (r, a)
}

/// `D_x(y)` and its Jacobian `[H, J]` in `(x, y)`.
fn critical_residual(sys: &PolynomialSystem<f64>, x: &[f64], y: &[f64]) -> (Vec<f64>, Matrix<f64>) {
    let n = x.len();
    let j = sys.jacobian_unchecked(x);
    let h = sys.mixed_hessian_unchecked(x, y);
    let mut a = Matrix::zeros(n - 1, 2 * n);
    for l in 0..n - 1 {
        for i in 0..n {
            a[(l, i)] = h[(l, i)];
            a[(l, n + i)] = j[(l, i)];
        }
    }
    (j.mul_vec(y), a)
}

/// Searches one system for witnesses of each event, starting from the
/// minimizer of `L` and, for the simultaneous-vanishing event, from fresh
/// restarts as well.
pub fn corollary_witness(sys: &PolynomialSystem<f64>, opts: &LMinOptions) -> EventCriticals {
    let shape = sys.shape();
    let (n, d) = (shape.n() as f64, shape.d() as f64);
    let lm = l_min_with(sys, opts);
    let p = &lm.argmin;

    let (dr, _) = gauss_newton(p, POLISH_ITERS, |x, y| double_root_residual(sys, x, y), |x, y| {
        norm(&sys.eval_unchecked(x)).max(norm(&sys.derivative_unchecked(x, &[y])))
    });
    let double_root = norm(&sys.eval_unchecked(dr.x())) <= EXACT_ZERO
        && norm(&sys.derivative_unchecked(dr.x(), &[dr.y()])) <= EXACT_ZERO;

    let (xr, nf) = root_near(sys, p.x(), POLISH_ITERS);
    let regular_root = (nf <= EXACT_ZERO)
        .then(|| sigma_min_tangent(sys, &xr).ok())
        .flatten()
        .map(|s| s / (d.powf(2.25) * n.sqrt()));

    let (cp, cv) = gauss_newton(p, POLISH_ITERS, |x, y| critical_residual(sys, x, y), |x, y| {
        norm(&sys.derivative_unchecked(x, &[y]))
    });
    let critical_value =
        (cv <= EXACT_ZERO).then(|| (norm(&sys.eval_unchecked(cp.x())) / (d.powf(1.125) * n.powf(0.25))).sqrt());

    let obj = Simultaneous { sys };
    let tol = opts.tol;
    let mut best: Option<(UnitPair<f64>, f64)> = None;
    let starts = std::iter::once(p.clone()).chain(
        (0..opts.restarts as u64).map(|r| start_pair(shape.n(), &opts.seeds, Purpose::Witness, opts.stream, r)),
    );
    let worst = |x: &[f64], y: &[f64]| norm(&sys.eval_unchecked(x)).max(norm(&sys.eval_unchecked(y)));
    for s in starts {
        let (q, _, _) = descend(&obj, s, opts.max_iters, tol);
        let (q, v) = gauss_newton(&q, POLISH_ITERS, |x, y| simultaneous_residual(sys, x, y), worst);
        if best.as_ref().map_or(true, |(_, b)| v < *b) {
            best = Some((q, v));
        }
    }
    let (_, worst_norm) = best.expect("at least one start");
    let simultaneous = Some(worst_norm / (d.powf(4.5) * n).powf(0.25));

    EventCriticals { double_root, regular_root, critical_value, simultaneous }
}

/// Witness search on every trial system of `cfg`.
pub fn run_corollary_events(cfg: &ExperimentConfig) -> Result<EventEstimates> {
    cfg.validate()?;
    let det = cfg.load_det()?;
    let criticals = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let sys = cfg.trial_system(det.as_ref(), t)?;
            Ok(corollary_witness(&sys, &cfg.lmin_options(t)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EventEstimates::from_criticals(cfg.eps_grid.clone(), criticals))
}
