use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{unflatten, CoefficientTensor, PolynomialSystem, SystemShape};
use crate::scalar::Scalar;

/// All non-decreasing index tuples `i₁ ≤ … ≤ i_d` over `0..n`, in
/// lexicographic order. There are `binom(n + d − 1, d)` of them.
pub fn sorted_multi_indices(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    if d == 0 {
        return vec![vec![]];
    }
    loop {
        out.push(cur.clone());
        // advance to the next non-decreasing tuple
        let mut pos = d;
        while pos > 0 {
            pos -= 1;
            if cur[pos] + 1 < n {
                let v = cur[pos] + 1;
                for slot in cur[pos..].iter_mut() {
                    *slot = v;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

/// Multinomial coefficient `d! / (α₁! ⋯ α_n!)` for the exponent vector of a
/// sorted multi-index, i.e. the number of distinct orderings of `key`.
pub fn multinomial(key: &[usize]) -> u128 {
    let mut result: u128 = 1;
    let mut placed = 0u128;
    let mut i = 0;
    while i < key.len() {
        let mut j = i;
        while j < key.len() && key[j] == key[i] {
            j += 1;
        }
        // choose positions for this run among the slots used so far
        for r in 1..=(j - i) as u128 {
            placed += 1;
            result = result * placed / r;
        }
        i = j;
    }
    result
}

/// Monomial coefficients `c_α` of each form, keyed by sorted multi-index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialForm<T> {
    pub shape: SystemShape,
    pub coeffs: Vec<BTreeMap<Vec<usize>, T>>,
}

impl<T: Scalar> MonomialForm<T> {
    /// `c_α` is the sum of the tensor entries over every ordering of α.
    pub fn from_tensor(t: &CoefficientTensor<T>) -> Self {
        let shape = t.shape();
        let (n, d) = (shape.n(), shape.d());
        let block = n.pow(d as u32);
        let mut idx = vec![0usize; d];
        let mut coeffs = vec![BTreeMap::new(); shape.m()];
        for (l, form) in coeffs.iter_mut().enumerate() {
            for flat in 0..block {
                unflatten(flat, n, &mut idx);
                let v = t.as_slice()[l * block + flat];
                idx.sort_unstable();
                *form.entry(idx.clone()).or_insert_with(T::zero) += v;
            }
        }
        Self { shape, coeffs }
    }

    pub fn evaluate(&self, x: &[T]) -> Vec<T> {
        self.coeffs
            .iter()
            .map(|form| {
                form.iter()
                    .map(|(key, &c)| key.iter().fold(c, |acc, &i| acc * x[i]))
                    .sum()
            })
            .collect()
    }

    /// Weyl coordinates `a_α = c_α / binom(d, α)^{1/2}`.
    pub fn weyl_coordinates(&self) -> Vec<BTreeMap<Vec<usize>, T>> {
        self.coeffs
            .iter()
            .map(|form| {
                form.iter()
                    .map(|(k, &c)| (k.clone(), c / T::lit(multinomial(k) as f64).sqrt()))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylNorm<T> {
    pub per_form: Vec<T>,
    pub total: T,
}

impl<T: Scalar> WeylNorm<T> {
    pub fn max_form(&self) -> T {
        self.per_form.iter().copied().fold(T::zero(), T::max)
    }
}

/// Weyl norm of the combined (deterministic + random) system.
pub fn weyl_norm<T: Scalar>(sys: &PolynomialSystem<T>) -> WeylNorm<T> {
    let mono = MonomialForm::from_tensor(sys.combined());
    let per_form: Vec<T> = mono
        .weyl_coordinates()
        .iter()
        .map(|form| form.values().map(|&a| a * a).sum::<T>().sqrt())
        .collect();
    let total = per_form.iter().map(|&v| v * v).sum::<T>().sqrt();
    WeylNorm { per_form, total }
}
