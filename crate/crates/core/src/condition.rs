//! Condition functionals: `L(x, y)`, its minimum over orthonormal pairs,
//! the pointwise μ⁽¹⁾ and μ⁽²⁾, planted double roots and the growth check.

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::diophantine::lift_monomial;
use crate::ensembles::{DistributionSpec, Purpose, SeedPolicy};
use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};
use crate::scalar::{axpy, dot, norm, normalize, Scalar};
use crate::system::{
    unit_tol, weyl_norm, CoefficientTensor, PolynomialSystem, SystemShape, TangentFrame,
};

/// Orthonormal pair `(x, y)`, the domain of `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct UnitPair<T> {
    x: Vec<T>,
    y: Vec<T>,
}

#[derive(Deserialize)]
struct RawPair<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> TryFrom<RawPair<T>> for UnitPair<T> {
    type Error = Error;
    fn try_from(raw: RawPair<T>) -> Result<Self> {
        Self::new(raw.x, raw.y)
    }
}

impl<T: Scalar> UnitPair<T> {
    /// Checks `‖x‖ = ‖y‖ = 1` and `x·y = 0` to `1e−10`.
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Shape(format!("pair lengths {} and {}", x.len(), y.len())));
        }
        let tol = unit_tol::<T>(1e-10);
        let (nx, ny, c) = (norm(&x), norm(&y), dot(&x, &y));
        if (nx - T::one()).abs() > tol || (ny - T::one()).abs() > tol || c.abs() > tol {
            return Err(Error::Contract(format!(
                "pair is not orthonormal: ‖x‖ = {nx}, ‖y‖ = {ny}, x·y = {c}"
            )));
        }
        Ok(Self { x, y })
    }

    /// Normalizes `x`, orthogonalizes `y` against it and normalizes `y`.
    pub fn orthonormalize(x: &[T], y: &[T]) -> Result<Self> {
        retract(x, y).ok_or_else(|| Error::Argument("cannot orthonormalize a degenerate pair".into()))
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<T>) {
        (self.x, self.y)
    }

    pub fn cast<U: Scalar>(&self) -> UnitPair<U> {
        let c = |v: &[T]| v.iter().map(|&a| U::lit(a.to_f64_lossy())).collect::<Vec<U>>();
        UnitPair { x: c(&self.x), y: c(&self.y) }
    }
}

fn retract<T: Scalar>(x: &[T], y: &[T]) -> Option<UnitPair<T>> {
    let mut x = x.to_vec();
    if normalize(&mut x) == T::zero() {
        return None;
    }
    let mut y = y.to_vec();
    for _ in 0..2 {
        let c = dot(&y, &x);
        axpy(&mut y, c, &x);
    }
    if normalize(&mut y) == T::zero() {
        return None;
    }
    Some(UnitPair { x, y })
}

/// `d^{9/2}·n`, the normalizer inside `L`.
pub fn l_scale(shape: SystemShape) -> f64 {
    (shape.d() as f64).powf(4.5) * shape.n() as f64
}

/// `L(x, y) = sqrt(‖f(x)‖/√s + ‖D_x(y)‖²/s)` with `s = d^{9/2}·n`.
pub fn l_pair<T: Scalar>(sys: &PolynomialSystem<T>, p: &UnitPair<T>) -> Result<T> {
    let f = sys.evaluate(p.x())?;
    let dy = sys.derivative_contract(p.x(), &[p.y()])?;
    Ok(l_from_parts(sys.shape(), norm(&f), norm(&dy)))
}

fn l_from_parts<T: Scalar>(shape: SystemShape, nf: T, ndy: T) -> T {
    l_squared_from_parts(shape, nf, ndy).sqrt()
}

fn l_squared_from_parts<T: Scalar>(shape: SystemShape, nf: T, ndy: T) -> T {
    let s = T::lit(l_scale(shape));
    nf / s.sqrt() + ndy * ndy / s
}

/// Knobs for [`l_min_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LMinOptions {
    pub restarts: usize,
    /// Descent iterations per phase.
    pub max_iters: usize,
    /// Step length below which a descent phase counts as converged.
    pub tol: f64,
    pub seeds: SeedPolicy,
    /// Selects the start pairs; restart `r` draws from sub-stream `r`.
    pub stream: u64,
}

impl Default for LMinOptions {
    fn default() -> Self {
        Self { restarts: 20, max_iters: 200, tol: 1e-12, seeds: SeedPolicy::default(), stream: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct LMinResult<T> {
    /// `L` at `argmin`, an upper bound on the true minimum.
    pub value: T,
    pub argmin: UnitPair<T>,
    pub restarts_used: usize,
    pub converged: bool,
}

/// [`l_min_with`] with the default seed policy.
pub fn l_min<T: Scalar>(sys: &PolynomialSystem<T>, restarts: usize, max_iters: usize, tol: f64) -> LMinResult<T> {
    l_min_with(sys, &LMinOptions { restarts, max_iters, tol, ..Default::default() })
}

/// Multistart minimization of `L` over orthonormal pairs.
///
/// Every restart runs projected gradient descent on `L²` (backtracking from
/// step 0.1, retraction after each step), then tries two Newton-type
/// polishes and keeps them only if they lower `L`: projection of `x` onto
/// `f = 0` with the optimal `y`, and Gauss–Newton on the residual
/// `(f(x), D_x(y))`. Improved points get a final descent phase.
pub fn l_min_with<T: Scalar>(sys: &PolynomialSystem<T>, opts: &LMinOptions) -> LMinResult<T> {
    let shape = sys.shape();
    let restarts = opts.restarts.max(1);
    let mut best: Option<(T, UnitPair<T>)> = None;
    let mut converged = false;
    for r in 0..restarts {
        let start = start_pair::<T>(shape.n(), &opts.seeds, Purpose::Restart, opts.stream, r as u64);
        let (cand, conv) = minimize_from(sys, start, opts.max_iters, T::lit(opts.tol));
        converged = conv;
        let v = l_pair_unchecked(sys, &cand);
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, cand));
        }
    }
    let (value, argmin) = best.expect("at least one restart");
    LMinResult { value, argmin, restarts_used: restarts, converged }
}

pub(crate) fn l_pair_unchecked<T: Scalar>(sys: &PolynomialSystem<T>, p: &UnitPair<T>) -> T {
    let f = sys.eval_unchecked(p.x());
    let dy = sys.derivative_unchecked(p.x(), &[p.y()]);
    l_from_parts(sys.shape(), norm(&f), norm(&dy))
}

pub(crate) fn start_pair<T: Scalar>(n: usize, seeds: &SeedPolicy, purpose: Purpose, trial: u64, sub: u64) -> UnitPair<T> {
    let g = seeds.draws(&DistributionSpec::gaussian(), purpose, trial, sub, 2 * n);
    let x: Vec<T> = g[..n].iter().map(|&v| T::lit(v)).collect();
    let y: Vec<T> = g[n..].iter().map(|&v| T::lit(v)).collect();
    retract(&x, &y).unwrap_or_else(|| {
        let mut x = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        x[0] = T::one();
        y[1] = T::one();
        UnitPair { x, y }
    })
}

fn minimize_from<T: Scalar>(sys: &PolynomialSystem<T>, start: UnitPair<T>, iters: usize, tol: T) -> (UnitPair<T>, bool) {
    let obj = LSquared { sys };
    // The squared residual has no kink at regular roots, so descending it
    // first does not stall there. Both paths are finished on L².
    let (warm, _, _) = descend(&Smoothed { sys }, start.clone(), iters, tol);
    let merit = |x: &[T], y: &[T]| obj.value(x, y);
    let (jump, _) = gauss_newton(&start, POLISH_ITERS, |x, y| double_root_residual(sys, x, y), merit);
    let mut best: Option<(UnitPair<T>, bool, T)> = None;
    for s in [start, warm, jump] {
        let (p, c) = refine(sys, s, iters, tol);
        let v = obj.value(p.x(), p.y());
        if best.as_ref().map_or(true, |b| v < b.2) {
            best = Some((p, c, v));
        }
    }
    let (p, c, _) = best.expect("three paths");
    (p, c)
}

/// Descent on `L²` followed by the two Newton-type polishes.
fn refine<T: Scalar>(sys: &PolynomialSystem<T>, start: UnitPair<T>, iters: usize, tol: T) -> (UnitPair<T>, bool) {
    let obj = LSquared { sys };
    let (mut best, mut best_v, mut conv) = descend(&obj, start, iters, tol);
    let mut improved = false;
    if let Some((p, v)) = newton_root(sys, best.x(), POLISH_ITERS) {
        if v < best_v {
            best = p;
            best_v = v;
            improved = true;
        }
    }
    let merit = |x: &[T], y: &[T]| obj.value(x, y);
    let (p, v) = gauss_newton(&best, POLISH_ITERS, |x, y| double_root_residual(sys, x, y), merit);
    if v < best_v {
        best = p;
        improved = true;
    }
    if improved {
        let (p, _, c) = descend(&obj, best, iters, tol);
        best = p;
        conv = c;
    }
    (best, conv)
}

const POLISH_ITERS: usize = 40;

/// A smooth objective on orthonormal pairs with its ambient gradient.
pub(crate) trait PairObjective<T: Scalar> {
    fn value(&self, x: &[T], y: &[T]) -> T;
    /// Value and ambient gradients `(∂/∂x, ∂/∂y)`.
    fn gradient(&self, x: &[T], y: &[T]) -> (T, Vec<T>, Vec<T>);
}

/// `L²`.
struct LSquared<'a, T> {
    sys: &'a PolynomialSystem<T>,
}

impl<T: Scalar> PairObjective<T> for LSquared<'_, T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        let f = self.sys.eval_unchecked(x);
        let dy = self.sys.jacobian_unchecked(x).mul_vec(y);
        l_squared_from_parts(self.sys.shape(), norm(&f), norm(&dy))
    }

    fn gradient(&self, x: &[T], y: &[T]) -> (T, Vec<T>, Vec<T>) {
        let s = T::lit(l_scale(self.sys.shape()));
        let f = self.sys.eval_unchecked(x);
        let j = self.sys.jacobian_unchecked(x);
        let dy = j.mul_vec(y);
        let nf = norm(&f);
        let value = l_squared_from_parts(self.sys.shape(), nf, norm(&dy));
        let two = T::lit(2.0);
        let mut gx = vec![T::zero(); x.len()];
        if nf > T::zero() {
            let jf = j.tr_mul_vec(&f);
            let c = T::one() / (nf * s.sqrt());
            gx.iter_mut().zip(&jf).for_each(|(g, &v)| *g += c * v);
        }
        let h = self.sys.mixed_hessian_unchecked(x, y);
        let hd = h.tr_mul_vec(&dy);
        gx.iter_mut().zip(&hd).for_each(|(g, &v)| *g += two * v / s);
        let gy: Vec<T> = j.tr_mul_vec(&dy).into_iter().map(|v| two * v / s).collect();
        (value, gx, gy)
    }
}

/// `‖f(x)‖² + ‖D_x(y)‖²/d`, zero exactly where `L` is.
struct Smoothed<'a, T> {
    sys: &'a PolynomialSystem<T>,
}

impl<T: Scalar> PairObjective<T> for Smoothed<'_, T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        let f = self.sys.eval_unchecked(x);
        let dy = self.sys.jacobian_unchecked(x).mul_vec(y);
        dot(&f, &f) + dot(&dy, &dy) / T::lit(self.sys.shape().d() as f64)
    }

    fn gradient(&self, x: &[T], y: &[T]) -> (T, Vec<T>, Vec<T>) {
        let w = T::one() / T::lit(self.sys.shape().d() as f64);
        let two = T::lit(2.0);
        let f = self.sys.eval_unchecked(x);
        let j = self.sys.jacobian_unchecked(x);
        let dy = j.mul_vec(y);
        let h = self.sys.mixed_hessian_unchecked(x, y);
        let gx: Vec<T> = j
            .tr_mul_vec(&f)
            .into_iter()
            .zip(h.tr_mul_vec(&dy))
            .map(|(a, b)| two * (a + w * b))
            .collect();
        let gy: Vec<T> = j.tr_mul_vec(&dy).into_iter().map(|v| two * w * v).collect();
        (dot(&f, &f) + w * dot(&dy, &dy), gx, gy)
    }
}

/// Projected gradient descent with Armijo backtracking from step 0.1.
/// Returns the final pair, its value and whether the step length fell
/// below `tol` before `iters` ran out.
pub(crate) fn descend<T: Scalar, O: PairObjective<T>>(
    obj: &O,
    start: UnitPair<T>,
    iters: usize,
    tol: T,
) -> (UnitPair<T>, T, bool) {
    let mut p = start;
    let mut value = obj.value(p.x(), p.y());
    let half = T::lit(0.5);
    let armijo = T::lit(1e-4);
    for _ in 0..iters {
        if value == T::zero() {
            return (p, value, true);
        }
        let (v0, gx, gy) = obj.gradient(p.x(), p.y());
        value = v0;
        let (x, y) = (p.x(), p.y());
        // tangent projection onto the Stiefel manifold of orthonormal pairs
        let (xgx, ygy) = (dot(x, &gx), dot(y, &gy));
        let mixed = half * (dot(y, &gx) + dot(x, &gy));
        let px: Vec<T> = (0..x.len()).map(|i| gx[i] - x[i] * xgx - y[i] * mixed).collect();
        let py: Vec<T> = (0..x.len()).map(|i| gy[i] - x[i] * mixed - y[i] * ygy).collect();
        let pn2 = dot(&px, &px) + dot(&py, &py);
        let pn = pn2.sqrt();
        if pn == T::zero() {
            return (p, value, true);
        }
        let mut t = T::lit(0.1);
        loop {
            if t * pn < tol {
                return (p, value, true);
            }
            let nx: Vec<T> = (0..x.len()).map(|i| x[i] - t * px[i]).collect();
            let ny: Vec<T> = (0..x.len()).map(|i| y[i] - t * py[i]).collect();
            if let Some(cand) = retract(&nx, &ny) {
                let cv = obj.value(cand.x(), cand.y());
                if cv <= value - armijo * t * pn2 {
                    p = cand;
                    value = cv;
                    break;
                }
            }
            t = t * half;
        }
    }
    (p, value, false)
}

/// Newton projection of `x` onto `{f = 0}` along the sphere, each iterate
/// paired with the `y` minimizing `‖D_x(y)‖`. Returns the best iterate by
/// `L²`.
pub(crate) fn newton_root<T: Scalar>(sys: &PolynomialSystem<T>, x0: &[T], iters: usize) -> Option<(UnitPair<T>, T)> {
    let mut best: Option<(UnitPair<T>, T)> = None;
    let mut x = x0.to_vec();
    for _ in 0..iters {
        let (y, sigma) = optimal_y(sys, &x)?;
        let f = sys.eval_unchecked(&x);
        let nf = norm(&f);
        let v = l_squared_from_parts(sys.shape(), nf, sigma);
        if best.as_ref().map_or(true, |(_, b)| v < *b) {
            best = Some((UnitPair { x: x.clone(), y }, v));
        }
        if nf == T::zero() {
            break;
        }
        let step = sphere_newton_step(sys, &x, &f);
        let sn = norm(&step);
        x.iter_mut().zip(&step).for_each(|(a, &b)| *a += b);
        normalize(&mut x);
        if sn <= T::epsilon() {
            break;
        }
    }
    best
}

/// Newton projection onto `{f = 0}` keeping the iterate with the smallest
/// `‖f(x)‖`.
pub(crate) fn root_near<T: Scalar>(sys: &PolynomialSystem<T>, x0: &[T], iters: usize) -> (Vec<T>, T) {
    let mut x = x0.to_vec();
    normalize(&mut x);
    let mut best = (x.clone(), norm(&sys.eval_unchecked(&x)));
    for _ in 0..iters {
        let f = sys.eval_unchecked(&x);
        let nf = norm(&f);
        if nf < best.1 {
            best = (x.clone(), nf);
        }
        if nf == T::zero() {
            break;
        }
        let step = sphere_newton_step(sys, &x, &f);
        x.iter_mut().zip(&step).for_each(|(a, &b)| *a += b);
        normalize(&mut x);
        if norm(&step) <= T::epsilon() {
            let nf = norm(&sys.eval_unchecked(&x));
            if nf < best.1 {
                best = (x.clone(), nf);
            }
            break;
        }
    }
    best
}

/// Min-norm solution of `J δ = −f`, `x·δ = 0`.
fn sphere_newton_step<T: Scalar>(sys: &PolynomialSystem<T>, x: &[T], f: &[T]) -> Vec<T> {
    let n = x.len();
    let j = sys.jacobian_unchecked(x);
    let mut a = Matrix::zeros(n, n);
    for l in 0..n - 1 {
        for i in 0..n {
            a[(l, i)] = j[(l, i)];
        }
    }
    for i in 0..n {
        a[(n - 1, i)] = x[i];
    }
    let mut rhs: Vec<T> = f.iter().map(|&v| -v).collect();
    rhs.push(T::zero());
    svd(&a).solve_min_norm(&rhs, T::epsilon() * T::lit(64.0))
}

/// Unit `y ⊥ x` minimizing `‖D_x(y)‖`, with the minimum (the least singular
/// value of the tangent Jacobian).
pub(crate) fn optimal_y<T: Scalar>(sys: &PolynomialSystem<T>, x: &[T]) -> Option<(Vec<T>, T)> {
    let frame = TangentFrame::new(x).ok()?;
    let b = frame.basis_matrix();
    let jt = sys.jacobian_unchecked(x).matmul(&b);
    let dec = svd(&jt);
    let k = jt.cols();
    let v = dec.v.column(k - 1);
    let mut y = b.mul_vec(&v);
    normalize(&mut y);
    Some((y, dec.singular_values[k - 1]))
}

/// `(f(x), D_x(y))` and its `2(n−1) × 2n` Jacobian `[[J, 0], [H, J]]`.
pub(crate) fn double_root_residual<T: Scalar>(sys: &PolynomialSystem<T>, x: &[T], y: &[T]) -> (Vec<T>, Matrix<T>) {
    let n = x.len();
    let m = n - 1;
    let f = sys.eval_unchecked(x);
    let j = sys.jacobian_unchecked(x);
    let h = sys.mixed_hessian_unchecked(x, y);
    let mut r = f;
    r.extend(j.mul_vec(y));
    let mut a = Matrix::zeros(2 * m, 2 * n);
    for l in 0..m {
        for i in 0..n {
            a[(l, i)] = j[(l, i)];
            a[(m + l, i)] = h[(l, i)];
            a[(m + l, n + i)] = j[(l, i)];
        }
    }
    (r, a)
}

/// Gauss–Newton on a residual of `(x, y)` with linearized orthonormality
/// rows, retracting after each step. Returns the best iterate by `merit`.
pub(crate) fn gauss_newton<T, R, M>(start: &UnitPair<T>, iters: usize, residual: R, merit: M) -> (UnitPair<T>, T)
where
    T: Scalar,
    R: Fn(&[T], &[T]) -> (Vec<T>, Matrix<T>),
    M: Fn(&[T], &[T]) -> T,
{
    let n = start.x().len();
    let mut p = start.clone();
    let mut best_v = merit(p.x(), p.y());
    let mut best = p.clone();
    for _ in 0..iters {
        if best_v == T::zero() {
            break;
        }
        let (r, a) = residual(p.x(), p.y());
        let rows = r.len();
        let mut big = Matrix::zeros(rows + 3, 2 * n);
        let mut rhs = vec![T::zero(); rows + 3];
        for k in 0..rows {
            for c in 0..2 * n {
                big[(k, c)] = a[(k, c)];
            }
            rhs[k] = -r[k];
        }
        for i in 0..n {
            big[(rows, i)] = p.x()[i];
            big[(rows + 1, n + i)] = p.y()[i];
            big[(rows + 2, i)] = p.y()[i];
            big[(rows + 2, n + i)] = p.x()[i];
        }
        let step = svd(&big).solve_min_norm(&rhs, T::epsilon() * T::lit(64.0));
        let sn = norm(&step);
        let nx: Vec<T> = (0..n).map(|i| p.x()[i] + step[i]).collect();
        let ny: Vec<T> = (0..n).map(|i| p.y()[i] + step[n + i]).collect();
        match retract(&nx, &ny) {
            Some(q) => p = q,
            None => break,
        }
        let v = merit(p.x(), p.y());
        if v < best_v {
            best_v = v;
            best = p.clone();
        }
        if sn <= T::epsilon() {
            break;
        }
    }
    (best, best_v)
}

/// A nonnegative value that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Extended<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// `num / den` with `0/0 = 0` and `c/0 = ∞` for `c > 0`.
    fn ratio(num: T, den: T) -> Self {
        if num == T::zero() {
            Extended::Finite(T::zero())
        } else if den == T::zero() {
            Extended::Infinite
        } else {
            Extended::Finite(num / den)
        }
    }

    fn min(self, other: Self) -> Self {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.min(b)),
            (Extended::Finite(a), Extended::Infinite) | (Extended::Infinite, Extended::Finite(a)) => {
                Extended::Finite(a)
            }
            _ => Extended::Infinite,
        }
    }

    /// `self ≤ other` in the extended order.
    pub fn le(&self, other: &Self) -> bool {
        match (self, other) {
            (_, Extended::Infinite) => true,
            (Extended::Infinite, Extended::Finite(_)) => false,
            (Extended::Finite(a), Extended::Finite(b)) => a <= b,
        }
    }
}

impl<T: Scalar> Serialize for Extended<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(v.to_f64_lossy()),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Extended<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(v) => Ok(Extended::Finite(T::lit(v))),
            Repr::Text(s) if s == "inf" => Ok(Extended::Infinite),
            Repr::Text(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct CondReport<T> {
    pub mu1: Extended<T>,
    pub mu2: Extended<T>,
    /// `√n · max_i ‖f_i‖_W · √d / σ`, the first argument of μ⁽²⁾'s min.
    pub mu2_jacobian_term: Extended<T>,
    /// `max_i ‖f_i‖_W / max_i |f_i(x)|`, the second argument.
    pub mu2_value_term: Extended<T>,
    pub sigma_min_tangent: T,
    pub weyl_total: T,
}

/// μ⁽¹⁾ and μ⁽²⁾ of the combined system at the unit vector `x`, with
/// `Δ = √d·I`. Zero Weyl norms give 0 even where a denominator vanishes.
pub fn cond_at<T: Scalar>(sys: &PolynomialSystem<T>, x: &[T]) -> Result<CondReport<T>> {
    let shape = sys.shape();
    if x.len() != shape.n() {
        return Err(Error::Shape(format!("x has length {}, system has n = {}", x.len(), shape.n())));
    }
    let frame = TangentFrame::new(x)?;
    let sigma = sys.jacobian_tangent(&frame)?.sigma_min;
    let w = weyl_norm(sys);
    let sqrt_d = T::from_usize_lossy(shape.d()).sqrt();
    let sqrt_n = T::from_usize_lossy(shape.n()).sqrt();
    let wmax = w.max_form();
    let fmax = sys.eval_unchecked(x).iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let mu1 = Extended::ratio(w.total * sqrt_d, sigma);
    let jac_term = Extended::ratio(sqrt_n * wmax * sqrt_d, sigma);
    let value_term = Extended::ratio(wmax, fmax);
    Ok(CondReport {
        mu1,
        mu2: jac_term.min(value_term),
        mu2_jacobian_term: jac_term,
        mu2_value_term: value_term,
        sigma_min_tangent: sigma,
        weyl_total: w.total,
    })
}

/// Least singular value of the Jacobian restricted to `x^⊥`.
pub fn sigma_min_tangent<T: Scalar>(sys: &PolynomialSystem<T>, x: &[T]) -> Result<T> {
    Ok(sys.jacobian_tangent(&TangentFrame::new(x)?)?.sigma_min)
}

/// Samples a random system and projects every form off the two
/// functionals `a ↦ f_l(x)` and `a ↦ D_{l,x}(y)`, so that `f(x) = 0` and
/// `D_x(y) = 0` up to roundoff.
pub fn plant_double_root(
    shape: SystemShape,
    p: &UnitPair<f64>,
    dist: &DistributionSpec,
    seeds: &SeedPolicy,
    trial: u64,
) -> Result<PolynomialSystem<f64>> {
    if p.x().len() != shape.n() {
        return Err(Error::Shape("pair length does not match n".into()));
    }
    let base = crate::ensembles::sample_tensor(shape, dist, seeds, Purpose::Plant, trial)?;
    project_double_root(base, p)
}

/// Projects each form of `base` onto the coefficients with `f(x) = 0` and `D_x(y) = 0`.
pub fn project_double_root(base: CoefficientTensor<f64>, p: &UnitPair<f64>) -> Result<PolynomialSystem<f64>> {
    let shape = base.shape();
    if p.x().len() != shape.n() {
        return Err(Error::Shape("pair length does not match n".into()));
    }
    let (n, d, m) = (shape.n(), shape.d(), shape.m());
    let u = lift_monomial(p.x(), d)?;
    // Σ over slots of x^{⊗d} with y in that slot
    let block = n.pow(d as u32);
    let mut w = vec![0.0; block];
    let mut idx = vec![0usize; d];
    for (flat, wv) in w.iter_mut().enumerate() {
        crate::system::unflatten(flat, n, &mut idx);
        for s in 0..d {
            let mut prod = 1.0;
            for (t, &i) in idx.iter().enumerate() {
                prod *= if t == s { p.y()[i] } else { p.x()[i] };
            }
            *wv += prod;
        }
    }
    let (uu, uw, ww) = (dot(&u, &u), dot(&u, &w), dot(&w, &w));
    let det = uu * ww - uw * uw;
    if !(det > 1e-12 * uu * ww) {
        return Err(Error::Construction(format!(
            "constraint functionals are linearly dependent (Gram determinant {det:e})"
        )));
    }
    let mut data = base.into_vec();
    for l in 0..m {
        let a = &mut data[l * block..(l + 1) * block];
        for _ in 0..2 {
            let (au, aw) = (dot(a, &u), dot(a, &w));
            let cu = (ww * au - uw * aw) / det;
            let cw = (uu * aw - uw * au) / det;
            for k in 0..block {
                a[k] -= cu * u[k] + cw * w[k];
            }
        }
    }
    Ok(PolynomialSystem::homogeneous(CoefficientTensor::from_data(shape, data)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub max_ratio: f64,
    pub samples: usize,
}

/// `‖f(x + εty + ε²z)‖ / (√n ε²)`.
pub fn growth_ratio<T: Scalar>(sys: &PolynomialSystem<T>, p: &UnitPair<T>, eps: T, t: T, z: &[T]) -> Result<T> {
    let n = sys.shape().n();
    if z.len() != n || p.x().len() != n {
        return Err(Error::Shape("growth sample has the wrong length".into()));
    }
    let e2 = eps * eps;
    let point: Vec<T> = (0..n).map(|i| p.x()[i] + eps * t * p.y()[i] + e2 * z[i]).collect();
    let f = sys.eval_unchecked(&point);
    Ok(norm(&f) / (T::from_usize_lossy(n).sqrt() * e2))
}

/// Maximum growth ratio over `samples` draws of `t ~ U[−1, 1]` and `z`
/// uniform in the unit ball. Requires `L(x, y) ≤ eps < 1`.
pub fn growth_check<T: Scalar>(
    sys: &PolynomialSystem<T>,
    p: &UnitPair<T>,
    eps: T,
    samples: usize,
    seeds: &SeedPolicy,
) -> Result<GrowthReport> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    let l = l_pair(sys, p)?;
    if l > eps {
        return Err(Error::Precondition(format!("L(x, y) = {l} exceeds eps = {eps}")));
    }
    let n = sys.shape().n();
    let gauss = DistributionSpec::gaussian();
    let mut max_ratio = T::zero();
    for k in 0..samples as u64 {
        let u = seeds.uniforms(Purpose::Growth, k, 0, 2);
        let t = T::lit(2.0 * u[0] - 1.0);
        let mut z: Vec<T> = seeds.draws(&gauss, Purpose::Growth, k, 1, n).into_iter().map(T::lit).collect();
        normalize(&mut z);
        let radius = T::lit(u[1].powf(1.0 / n as f64));
        z.iter_mut().for_each(|v| *v *= radius);
        max_ratio = max_ratio.max(growth_ratio(sys, p, eps, t, &z)?);
    }
    Ok(GrowthReport { max_ratio: max_ratio.to_f64_lossy(), samples })
}
