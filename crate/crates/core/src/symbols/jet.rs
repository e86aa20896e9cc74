//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A jet in `n` variables truncated at total order `p` stores the normalized
//! Taylor coefficients `∂^α f / α!` for every `|α| ≤ p`. Arithmetic on jets is
//! exact up to truncation, so evaluating a symbol expression on jets yields
//! its derivatives to all requested orders without finite differences.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::scalar::Scalar;
use crate::multi_index::{binomial, enumerate_multi_indices, factorial, MultiIndex};

#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: u32,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    // (i, j, k): coefficient i times coefficient j lands in slot k
    products: Vec<(usize, usize, usize)>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: u32) -> Arc<Self> {
        let indices = enumerate_multi_indices(nvars, order);
        let lookup: HashMap<MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.order() + b.order() <= order {
                    products.push((i, j, lookup[&(a + b)]));
                }
            }
        }
        Arc::new(Self {
            nvars,
            order,
            indices,
            lookup,
            products,
        })
    }

    /// Shared per-thread instance for `(nvars, order)`.
    pub fn cached(nvars: usize, order: u32) -> Arc<Self> {
        thread_local! {
            static CACHE: std::cell::RefCell<HashMap<(usize, u32), Arc<JetSpace>>> =
                std::cell::RefCell::new(HashMap::new());
        }
        CACHE.with(|c| {
            Arc::clone(
                c.borrow_mut()
                    .entry((nvars, order))
                    .or_insert_with(|| JetSpace::new(nvars, order)),
            )
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }
}

#[derive(Clone, Debug)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Self {
        let mut coeffs = vec![0.0; space.indices.len()];
        coeffs[0] = v;
        Self {
            space: Arc::clone(space),
            coeffs,
        }
    }

    /// The independent variable `var`, expanded about `at`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, at: f64) -> Self {
        let mut jet = Self::constant(space, at);
        if space.order >= 1 {
            let unit = MultiIndex::unit(space.nvars, var);
            jet.coeffs[space.lookup[&unit]] = 1.0;
        }
        jet
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Normalized coefficients `∂^α f / α!`, aligned with `space().indices()`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.space.position(alpha).map(|i| self.coeffs[i]).unwrap_or(0.0)
    }

    /// The partial derivative `∂^α f` (coefficient times `α!`).
    pub fn derivative(&self, alpha: &MultiIndex) -> f64 {
        self.coefficient(alpha) * alpha.factorial()
    }

    /// Compose the univariate series `Σ c_n t^n` with this jet's
    /// non-constant part.
    fn compose(&self, series: &[f64]) -> Self {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Self::constant(&self.space, series[0]);
        let mut power = Self::constant(&self.space, 1.0);
        for &c in series.iter().skip(1) {
            power = &power * &h;
            if c != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += c * p;
                }
            }
        }
        out
    }

    fn recip(&self) -> Self {
        let a = self.coeffs[0];
        let p = self.space.order as usize;
        let series: Vec<f64> = (0..=p)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } / a.powi(n as i32 + 1))
            .collect();
        self.compose(&series)
    }
}

impl<'a> Add for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Jet {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }
}

impl<'a> Sub for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Jet {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }
}

impl<'a> Mul for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.space.products {
            coeffs[k] += self.coeffs[i] * rhs.coeffs[j];
        }
        Jet {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        &self * &rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(&self.space, v)
    }

    fn sqrt(&self) -> Self {
        let a = self.coeffs[0];
        let p = self.space.order;
        // binom(1/2, n) a^(1/2 - n)
        let mut series = Vec::with_capacity(p as usize + 1);
        let mut gen_binom = 1.0;
        for n in 0..=p {
            if n > 0 {
                gen_binom *= (0.5 - f64::from(n - 1)) / f64::from(n);
            }
            series.push(gen_binom * a.powf(0.5 - f64::from(n)));
        }
        self.compose(&series)
    }

    fn exp(&self) -> Self {
        let e = self.coeffs[0].exp();
        let series: Vec<f64> = (0..=self.space.order).map(|n| e / factorial(n)).collect();
        self.compose(&series)
    }

    fn ln(&self) -> Self {
        let a = self.coeffs[0];
        let series: Vec<f64> = (0..=self.space.order)
            .map(|n| {
                if n == 0 {
                    a.ln()
                } else {
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (f64::from(n) * a.powi(n as i32))
                }
            })
            .collect();
        self.compose(&series)
    }

    fn sin(&self) -> Self {
        let (s, c) = self.coeffs[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.space.order)
            .map(|n| cycle[n as usize % 4] / factorial(n))
            .collect();
        self.compose(&series)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.coeffs[0].sin_cos();
        let cycle = [c, -s, -c, s];
        let series: Vec<f64> = (0..=self.space.order)
            .map(|n| cycle[n as usize % 4] / factorial(n))
            .collect();
        self.compose(&series)
    }

    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let a = self.coeffs[0];
        let p = self.space.order;
        if a == 0.0 {
            let mut out = Jet::constant(&self.space, 1.0);
            for _ in 0..n {
                out = &out * self;
            }
            return out;
        }
        let series: Vec<f64> = (0..=p)
            .map(|m| {
                if m as i32 > n {
                    0.0
                } else {
                    binomial(n as u32, m) * a.powi(n - m as i32)
                }
            })
            .collect();
        self.compose(&series)
    }
}
