//! Multi-indices over `N` phase-space directions.

use std::fmt;

/// A multi-index `α = (α₁, …, α_N)` of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// Unit index `e_i` in `dim` dimensions.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut c = vec![0; dim];
        c[i] = 1;
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|α| = Σ αᵢ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_even(&self) -> bool {
        self.order().is_multiple_of(2)
    }

    /// `α! = Π αᵢ!` in floating point.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// `α!` as an exact integer.
    pub fn factorial_exact(&self) -> num_bigint::BigUint {
        self.0
            .iter()
            .map(|&a| {
                (1..=a as u64)
                    .map(num_bigint::BigUint::from)
                    .product::<num_bigint::BigUint>()
            })
            .product()
    }

    /// `v^α = Π vᵢ^αᵢ`.
    pub fn pow(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.0.len());
        self.0.iter().zip(v).map(|(&a, &x)| x.powi(a as i32)).product()
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (&a, &b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(b)?);
        }
        Some(MultiIndex(out))
    }
}

impl std::ops::Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), rhs.0.len());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// All multi-indices of exactly order `n` in `dim` dimensions, ordered
/// lexicographically with the first component descending.
pub fn multi_indices_of_order(dim: usize, n: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    fill(&mut current, 0, n, &mut out);
    out
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for a in (0..=remaining).rev() {
        current[pos] = a;
        fill(current, pos + 1, remaining - a, out);
    }
    current[pos] = 0;
}

/// All multi-indices with `|α| ≤ max_order`, in graded lexicographic order.
///
/// The count is `C(dim + max_order, dim)`.
pub fn enumerate_multi_indices(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    assert!(dim >= 1, "multi-indices need at least one dimension");
    (0..=max_order).flat_map(|n| multi_indices_of_order(dim, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_order_two_dims() {
        let got = enumerate_multi_indices(2, 1);
        let want: Vec<MultiIndex> = vec![vec![0, 0].into(), vec![1, 0].into(), vec![0, 1].into()];
        assert_eq!(got, want);
        assert_eq!(enumerate_multi_indices(2, 2).len(), 6);
        assert_eq!(enumerate_multi_indices(3, 4).len(), 35);
    }

    #[test]
    fn counts_match_binomial() {
        for dim in 1..=4 {
            for p in 0..=6 {
                let n = enumerate_multi_indices(dim, p).len() as f64;
                assert_eq!(n, binomial(dim as u32 + p, dim as u32));
            }
        }
    }

    #[test]
    fn factorials() {
        let a = MultiIndex::new(vec![3, 0, 2]);
        assert_eq!(a.order(), 5);
        assert_eq!(a.factorial(), 12.0);
        assert_eq!(a.factorial_exact(), num_bigint::BigUint::from(12u32));
        assert_eq!(a.pow(&[2.0, 7.0, 3.0]), 72.0);
    }
}
