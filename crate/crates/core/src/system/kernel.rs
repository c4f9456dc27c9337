//! Contraction kernels over dense `forms × vars^degree` arrays.
//!
//! A multilinear array `a[l, i₁, …, i_d]` is stored row-major with the form
//! index outermost. Slots are numbered `0..degree` from the most significant
//! index. All kernels are exact sums, no symmetrization is assumed.

use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};

/// Borrowed view of a dense multilinear array.
#[derive(Debug, Clone, Copy)]
pub struct TensorView<'a, T> {
    pub forms: usize,
    pub vars: usize,
    pub degree: usize,
    pub data: &'a [T],
}

impl<'a, T: Scalar> TensorView<'a, T> {
    pub fn new(forms: usize, vars: usize, degree: usize, data: &'a [T]) -> Self {
        assert_eq!(data.len(), forms * vars.pow(degree as u32), "array length");
        Self { forms, vars, degree, data }
    }

    /// Entries per form, `vars^degree`.
    #[inline]
    pub fn block(&self) -> usize {
        self.vars.pow(self.degree as u32)
    }

    fn form(&self, l: usize) -> &'a [T] {
        let b = self.block();
        &self.data[l * b..(l + 1) * b]
    }

    /// `a_l(v₀, …, v_{d−1})` for every form, by `d` successive mode
    /// contractions starting from the last slot.
    pub fn contract_all(&self, vecs: &[&[T]]) -> Vec<T> {
        assert_eq!(vecs.len(), self.degree);
        let n = self.vars;
        if self.degree == 0 {
            return self.data.to_vec();
        }
        let mut scratch = vec![T::zero(); self.block() / n];
        (0..self.forms)
            .map(|l| {
                let len = contract_trailing(self.form(l), n, vecs, 0, &mut scratch);
                debug_assert_eq!(len, 1);
                scratch[0]
            })
            .collect()
    }

    /// Contracts every slot except `skip` and returns the `forms × vars`
    /// matrix `B[l][i] = a_l(v₀, …, e_i at skip, …, v_{d−1})`.
    ///
    /// `vecs[skip]` is ignored.
    pub fn contract_except(&self, vecs: &[&[T]], skip: usize) -> Matrix<T> {
        assert_eq!(vecs.len(), self.degree);
        assert!(skip < self.degree);
        let n = self.vars;
        let mut out = Matrix::zeros(self.forms, n);
        // Leading slots collapse to one weight per prefix.
        let weights = prefix_weights(vecs, skip, n);
        let mut scratch = vec![T::zero(); self.block() / n];
        for l in 0..self.forms {
            let block = self.form(l);
            let len = contract_trailing(block, n, vecs, skip + 1, &mut scratch);
            // `scratch[..len]` now holds slots 0..=skip, len = n^(skip+1).
            let remaining: &[T] = if skip + 1 == self.degree { block } else { &scratch[..len] };
            for (p, &w) in weights.iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                for i in 0..n {
                    out[(l, i)] += w * remaining[p * n + i];
                }
            }
        }
        out
    }

    /// General contraction leaving the slots marked `None` free, in slot
    /// order. The result is `forms × vars^free` in row-major order.
    pub fn contract_free(&self, vecs: &[Option<&[T]>]) -> Vec<T> {
        assert_eq!(vecs.len(), self.degree);
        let n = self.vars;
        let d = self.degree;
        let free: Vec<usize> = (0..d).filter(|&s| vecs[s].is_none()).collect();
        let out_block = n.pow(free.len() as u32);
        let mut out = vec![T::zero(); self.forms * out_block];
        let mut digits = vec![0usize; d];
        for l in 0..self.forms {
            digits.iter_mut().for_each(|x| *x = 0);
            for &a in self.form(l) {
                let mut w = a;
                let mut o = 0usize;
                for s in 0..d {
                    match vecs[s] {
                        Some(v) => w *= v[digits[s]],
                        None => o = o * n + digits[s],
                    }
                }
                out[l * out_block + o] += w;
                // odometer, last slot fastest
                for s in (0..d).rev() {
                    digits[s] += 1;
                    if digits[s] < n {
                        break;
                    }
                    digits[s] = 0;
                }
            }
        }
        out
    }
}

/// Contracts slots `first..d` of one form's block, last slot first, and
/// returns the length of the remaining prefix array left in `scratch`
/// (or the block length when nothing was contracted).
fn contract_trailing<T: Scalar>(
    block: &[T],
    n: usize,
    vecs: &[&[T]],
    first: usize,
    scratch: &mut [T],
) -> usize {
    let d = vecs.len();
    if first >= d {
        return block.len();
    }
    let mut len = block.len() / n;
    let v = vecs[d - 1];
    for (p, out) in scratch[..len].iter_mut().enumerate() {
        *out = dot(&block[p * n..(p + 1) * n], v);
    }
    for s in (first..d - 1).rev() {
        let v = vecs[s];
        let next = len / n;
        for p in 0..next {
            let acc = dot(&scratch[p * n..(p + 1) * n], v);
            scratch[p] = acc;
        }
        len = next;
    }
    len
}

/// Products `Π_{s<upto} vecs[s][i_s]` for every prefix `(i₀, …, i_{upto−1})`.
fn prefix_weights<T: Scalar>(vecs: &[&[T]], upto: usize, n: usize) -> Vec<T> {
    let mut w = vec![T::one()];
    for v in &vecs[..upto] {
        let mut next = Vec::with_capacity(w.len() * n);
        for &a in &w {
            next.extend(v.iter().map(|&b| a * b));
        }
        w = next;
    }
    w
}

/// Visits every injective assignment of `k` ordered directions to the
/// `d` slots (there are `d!/(d−k)!` of them).
pub(crate) fn for_each_assignment(d: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(d: usize, k: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for s in 0..d {
            if !used[s] {
                used[s] = true;
                cur.push(s);
                rec(d, k, used, cur, f);
                cur.pop();
                used[s] = false;
            }
        }
    }
    let mut used = vec![false; d];
    let mut cur = Vec::with_capacity(k);
    rec(d, k, &mut used, &mut cur, &mut f);
}
