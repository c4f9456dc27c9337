//! Polynomial systems stored as unsymmetrized coefficient tensors.
//!
//! A system of `m = n − 1` homogeneous forms of degree `d` in `n` variables is
//! `f_l(x) = Σ a[l, i₁, …, i_d] x_{i₁} ⋯ x_{i_d}`, summed over all ordered
//! index tuples. Symmetrized tensors and monomial coefficients are derived
//! views (see [`symmetrize`] and [`MonomialForm`]).

pub mod io;
pub mod kernel;
mod monomial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{axpy, dot, norm, normalize, Scalar};

pub use kernel::TensorView;
pub use monomial::{multinomial, sorted_multi_indices, weyl_norm, MonomialForm, WeylNorm};

/// Largest number of coefficient entries `m·n^d` allocated unless a caller
/// raises the cap explicitly.
pub const DEFAULT_ENTRY_CAP: u128 = 100_000_000;

/// Number of variables `n`, degree `d`, and `m = n − 1` forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub struct SystemShape {
    n: usize,
    d: usize,
}

#[derive(Serialize, Deserialize)]
struct RawShape {
    n: usize,
    d: usize,
    #[serde(default)]
    m: Option<usize>,
}

impl TryFrom<RawShape> for SystemShape {
    type Error = Error;
    fn try_from(raw: RawShape) -> Result<Self> {
        let shape = SystemShape::new(raw.n, raw.d)?;
        if let Some(m) = raw.m {
            if m != shape.m() {
                return Err(Error::Shape(format!("m = {m} but n − 1 = {}", shape.m())));
            }
        }
        Ok(shape)
    }
}

impl From<SystemShape> for RawShape {
    fn from(s: SystemShape) -> Self {
        RawShape { n: s.n, d: s.d, m: Some(s.m()) }
    }
}

impl SystemShape {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Shape(format!("need n ≥ 2 variables, got {n}")));
        }
        if d < 1 {
            return Err(Error::Shape("degree must be at least 1".into()));
        }
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.n - 1
    }

    /// `m · n^d`, without overflow.
    pub fn entries(&self) -> u128 {
        (self.m() as u128).saturating_mul((self.n as u128).saturating_pow(self.d as u32))
    }

    pub fn ensure_within(&self, cap: u128) -> Result<()> {
        let requested = self.entries();
        if requested > cap {
            return Err(Error::Allocation { requested, cap });
        }
        Ok(())
    }

    /// Bezout number `d^{n−1}`.
    pub fn bezout(&self) -> f64 {
        (self.d as f64).powi(self.m() as i32)
    }

    /// `N = (n − 1) · binom(n − 1 + d, d)`.
    pub fn monomial_count_total(&self) -> f64 {
        let mut b = 1.0f64;
        for i in 1..=self.d {
            b = b * (self.m() + i) as f64 / i as f64;
        }
        self.m() as f64 * b
    }
}

/// Dense row-major coefficient array `a[l, i₁, …, i_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTensor<T> {
    shape: SystemShape,
    data: Vec<T>,
}

impl<T: Scalar> CoefficientTensor<T> {
    pub fn zeros(shape: SystemShape) -> Result<Self> {
        shape.ensure_within(DEFAULT_ENTRY_CAP)?;
        Ok(Self { shape, data: vec![T::zero(); shape.entries() as usize] })
    }

    /// Wraps row-major data; rejects wrong lengths and non-finite entries.
    pub fn from_data(shape: SystemShape, data: Vec<T>) -> Result<Self> {
        if data.len() as u128 != shape.entries() {
            return Err(Error::Shape(format!(
                "tensor data has {} entries, shape needs {}",
                data.len(),
                shape.entries()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite coefficient at flat index {pos}")));
        }
        Ok(Self { shape, data })
    }

    /// Fills the tensor from `f(l, [i₁, …, i_d])`.
    pub fn from_fn(shape: SystemShape, mut f: impl FnMut(usize, &[usize]) -> T) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let (n, d) = (shape.n(), shape.d());
        let mut idx = vec![0usize; d];
        let block = n.pow(d as u32);
        for l in 0..shape.m() {
            for flat in 0..block {
                unflatten(flat, n, &mut idx);
                t.data[l * block + flat] = f(l, &idx);
            }
        }
        Ok(t)
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn view(&self) -> TensorView<'_, T> {
        TensorView::new(self.shape.m(), self.shape.n(), self.shape.d(), &self.data)
    }

    pub fn get(&self, l: usize, idx: &[usize]) -> T {
        self.data[self.flat_index(l, idx)]
    }

    pub fn flat_index(&self, l: usize, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.d());
        let n = self.shape.n();
        idx.iter().fold(l, |acc, &i| acc * n + i)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { shape: self.shape, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn added(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape("adding tensors of different shapes".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Self { shape: self.shape, data })
    }

    /// Euclidean norm of all entries.
    pub fn frobenius_norm(&self) -> T {
        norm(&self.data)
    }

    pub fn cast<U: Scalar>(&self) -> CoefficientTensor<U> {
        CoefficientTensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

pub(crate) fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}

/// Deterministic part plus random part; everything evaluates the sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem<T> {
    shape: SystemShape,
    det: Option<CoefficientTensor<T>>,
    rand: CoefficientTensor<T>,
    combined: CoefficientTensor<T>,
}

impl<T: Scalar> PolynomialSystem<T> {
    pub fn new(rand: CoefficientTensor<T>, det: Option<CoefficientTensor<T>>) -> Result<Self> {
        let combined = match &det {
            Some(c) => c.added(&rand)?,
            None => rand.clone(),
        };
        Ok(Self { shape: rand.shape(), det, rand, combined })
    }

    pub fn homogeneous(rand: CoefficientTensor<T>) -> Self {
        Self::new(rand, None).expect("no deterministic part to mismatch")
    }

    pub fn zero(shape: SystemShape) -> Result<Self> {
        Ok(Self::homogeneous(CoefficientTensor::zeros(shape)?))
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn det(&self) -> Option<&CoefficientTensor<T>> {
        self.det.as_ref()
    }

    pub fn rand(&self) -> &CoefficientTensor<T> {
        &self.rand
    }

    /// Entrywise `det + rand`.
    pub fn combined(&self) -> &CoefficientTensor<T> {
        &self.combined
    }

    pub fn scaled(&self, c: T) -> Self {
        let det = self.det.as_ref().map(|t| t.scaled(c));
        Self::new(self.rand.scaled(c), det).expect("same shape")
    }

    /// Adds `other`'s combined tensor to the random part.
    pub fn perturbed(&self, other: &CoefficientTensor<T>) -> Result<Self> {
        Self::new(self.rand.added(other)?, self.det.clone())
    }

    fn check_len(&self, v: &[T], what: &str) -> Result<()> {
        if v.len() != self.shape.n() {
            return Err(Error::Shape(format!(
                "{what} has length {}, system has n = {}",
                v.len(),
                self.shape.n()
            )));
        }
        Ok(())
    }

    /// `f(x)`, one value per form.
    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x, "x")?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> Vec<T> {
        let vecs = vec![x; self.shape.d()];
        self.combined.view().contract_all(&vecs)
    }

    /// `D⁽ᵏ⁾_x(y₁, …, y_k)` per form: the `k`-th derivative of `f` at `x`
    /// applied to the directions, summing over every injective placement of
    /// the directions into the `d` tensor slots. `k = 0` is [`evaluate`].
    ///
    /// [`evaluate`]: Self::evaluate
    pub fn derivative_contract(&self, x: &[T], dirs: &[&[T]]) -> Result<Vec<T>> {
        let d = self.shape.d();
        if dirs.len() > d {
            return Err(Error::Argument(format!(
                "derivative order {} exceeds degree {d}",
                dirs.len()
            )));
        }
        self.check_len(x, "x")?;
        for y in dirs {
            self.check_len(y, "direction")?;
        }
        Ok(self.derivative_unchecked(x, dirs))
    }

    pub(crate) fn derivative_unchecked(&self, x: &[T], dirs: &[&[T]]) -> Vec<T> {
        let d = self.shape.d();
        let view = self.combined.view();
        let mut out = vec![T::zero(); self.shape.m()];
        let mut slots: Vec<&[T]> = vec![x; d];
        kernel::for_each_assignment(d, dirs.len(), |assign| {
            for (dir, &s) in dirs.iter().zip(assign) {
                slots[s] = dir;
            }
            for (o, v) in out.iter_mut().zip(view.contract_all(&slots)) {
                *o += v;
            }
            for &s in assign {
                slots[s] = x;
            }
        });
        out
    }

    /// Jacobian `J[l][j] = ∂f_l/∂x_j` at `x` (an `m × n` matrix).
    pub fn jacobian(&self, x: &[T]) -> Result<Matrix<T>> {
        self.check_len(x, "x")?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[T]) -> Matrix<T> {
        let d = self.shape.d();
        let view = self.combined.view();
        let vecs = vec![x; d];
        let mut j = Matrix::zeros(self.shape.m(), self.shape.n());
        for skip in 0..d {
            let b = view.contract_except(&vecs, skip);
            for l in 0..self.shape.m() {
                for i in 0..self.shape.n() {
                    j[(l, i)] += b[(l, i)];
                }
            }
        }
        j
    }

    /// `M[l][j] = D⁽²⁾_{l,x}(y, e_j)`, i.e. the Jacobian of `x ↦ D_x(y)`.
    pub(crate) fn mixed_hessian_unchecked(&self, x: &[T], y: &[T]) -> Matrix<T> {
        let d = self.shape.d();
        let mut h = Matrix::zeros(self.shape.m(), self.shape.n());
        if d < 2 {
            return h;
        }
        let view = self.combined.view();
        let mut slots: Vec<&[T]> = vec![x; d];
        for p in 0..d {
            slots[p] = y;
            for q in (0..d).filter(|&q| q != p) {
                let b = view.contract_except(&slots, q);
                for l in 0..self.shape.m() {
                    for i in 0..self.shape.n() {
                        h[(l, i)] += b[(l, i)];
                    }
                }
            }
            slots[p] = x;
        }
        h
    }

    /// The full `k`-th derivative array at `x` for `k ≤ 2`, row-major
    /// `m × n^k`. Higher orders are only available contracted.
    pub fn derivative_tensor(&self, x: &[T], k: usize) -> Result<Vec<T>> {
        self.check_len(x, "x")?;
        let (n, d, m) = (self.shape.n(), self.shape.d(), self.shape.m());
        match k {
            0 => Ok(self.eval_unchecked(x)),
            1 => Ok(self.jacobian_unchecked(x).as_slice().to_vec()),
            2 => {
                let mut out = vec![T::zero(); m * n * n];
                if d < 2 {
                    return Ok(out);
                }
                let view = self.combined.view();
                for p in 0..d {
                    for q in (0..d).filter(|&q| q != p) {
                        let vecs: Vec<Option<&[T]>> = (0..d)
                            .map(|s| if s == p || s == q { None } else { Some(x) })
                            .collect();
                        let free = view.contract_free(&vecs);
                        // free slots come out in slot order; orient as (p, q)
                        for l in 0..m {
                            for a in 0..n {
                                for b in 0..n {
                                    let v = free[l * n * n + a * n + b];
                                    let (i, j) = if p < q { (a, b) } else { (b, a) };
                                    out[l * n * n + i * n + j] += v;
                                }
                            }
                        }
                    }
                }
                Ok(out)
            }
            _ => Err(Error::Argument(format!(
                "derivative arrays are materialized only for k ≤ 2, got {k}"
            ))),
        }
    }

    /// Jacobian, its restriction to the tangent space, and the least
    /// singular value of the restriction.
    pub fn jacobian_tangent(&self, frame: &TangentFrame<T>) -> Result<JacobianTangent<T>> {
        self.check_len(frame.x(), "frame point")?;
        let j = self.jacobian_unchecked(frame.x());
        let jt = j.matmul(&frame.basis_matrix());
        let sigma_min = linalg::sigma_min(&jt);
        Ok(JacobianTangent { j, jt, sigma_min })
    }
}

#[derive(Debug, Clone)]
pub struct JacobianTangent<T> {
    /// `m × n`
    pub j: Matrix<T>,
    /// `m × (n − 1)`, square
    pub jt: Matrix<T>,
    pub sigma_min: T,
}

pub(crate) fn unit_tol<T: Scalar>(base: f64) -> T {
    T::lit(base).max(T::epsilon() * T::lit(64.0))
}

/// A unit vector together with an orthonormal basis of its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame<T> {
    x: Vec<T>,
    basis: Vec<Vec<T>>,
}

impl<T: Scalar> TangentFrame<T> {
    /// Completes the unit vector `x` to an orthonormal frame.
    ///
    /// The standard basis vector along the largest `|x_j|` is dropped and the
    /// others are orthogonalized (two passes of modified Gram–Schmidt).
    pub fn new(x: &[T]) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::Shape("tangent frame needs n ≥ 2".into()));
        }
        let nx = norm(x);
        if (nx - T::one()).abs() > unit_tol(1e-12) {
            return Err(Error::Contract(format!("frame point has norm {nx}, expected 1")));
        }
        let pivot = (0..n)
            .max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap())
            .unwrap();
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(n - 1);
        for i in (0..n).filter(|&i| i != pivot) {
            let mut v = vec![T::zero(); n];
            v[i] = T::one();
            for _ in 0..2 {
                let c = dot(&v, x);
                axpy(&mut v, c, x);
                for b in &basis {
                    let c = dot(&v, b);
                    axpy(&mut v, c, b);
                }
            }
            normalize(&mut v);
            basis.push(v);
        }
        Ok(Self { x: x.to_vec(), basis })
    }

    /// Normalizes `v` first.
    pub fn from_direction(v: &[T]) -> Result<Self> {
        let mut x = v.to_vec();
        if normalize(&mut x) == T::zero() {
            return Err(Error::Argument("zero direction".into()));
        }
        Self::new(&x)
    }

    /// Uses a caller-provided orthonormal basis of `x^⊥` (checked).
    pub fn with_basis(x: &[T], basis: Vec<Vec<T>>) -> Result<Self> {
        let n = x.len();
        if basis.len() + 1 != n || basis.iter().any(|b| b.len() != n) {
            return Err(Error::Shape("basis must hold n − 1 vectors of length n".into()));
        }
        let tol = unit_tol::<T>(1e-10);
        for (i, b) in basis.iter().enumerate() {
            if dot(b, x).abs() > tol {
                return Err(Error::Contract(format!("basis vector {i} not orthogonal to x")));
            }
            for (j, c) in basis.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                if (dot(b, c) - target).abs() > tol {
                    return Err(Error::Contract("basis is not orthonormal".into()));
                }
            }
        }
        Ok(Self { x: x.to_vec(), basis })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    /// `n × (n − 1)` matrix with the basis as columns.
    pub fn basis_matrix(&self) -> Matrix<T> {
        Matrix::from_columns(&self.basis)
    }
}

/// Averages every entry over the `d!` orderings of its slot indices.
pub fn symmetrize<T: Scalar>(t: &CoefficientTensor<T>) -> CoefficientTensor<T> {
    let shape = t.shape();
    let (n, d) = (shape.n(), shape.d());
    let block = n.pow(d as u32);
    let mut out = t.as_slice().to_vec();
    let mut idx = vec![0usize; d];
    // orbit representative: flat index of the sorted multi-index
    let canon: Vec<usize> = (0..block)
        .map(|flat| {
            unflatten(flat, n, &mut idx);
            idx.sort_unstable();
            idx.iter().fold(0, |acc, &i| acc * n + i)
        })
        .collect();
    let mut sums = vec![T::zero(); block];
    let mut counts = vec![0usize; block];
    for l in 0..shape.m() {
        sums.iter_mut().for_each(|s| *s = T::zero());
        counts.iter_mut().for_each(|c| *c = 0);
        let src = &t.as_slice()[l * block..(l + 1) * block];
        for (flat, &v) in src.iter().enumerate() {
            sums[canon[flat]] += v;
            counts[canon[flat]] += 1;
        }
        for flat in 0..block {
            let c = canon[flat];
            out[l * block + flat] = sums[c] / T::from_usize_lossy(counts[c]);
        }
    }
    CoefficientTensor::from_data(shape, out).expect("same shape, finite averages")
}
