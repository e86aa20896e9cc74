//! Momentum-distribution calculus.
//!
//! A momentum distribution concentrated near `k = k(x)` acts on a symbol
//! through its moments `K_α = ∫ f(k̃) k̃^α dk̃`. Pairing the derivative series
//! of `δ` with a test symbol and integrating by parts gives
//!
//! ```text
//! ⟨f, A⟩ = Σ_β K_β/β! ∂_k^β A(x, k(x)).
//! ```
//!
//! In 1D with `K = {1, 0, −g²}` and `A = k²` at centre `k` this is
//! `k² + (−g²/2)·2 = k² − g²`: the sign of the second moment enters
//! directly, with no extra `(−1)^{|β|}`.

use std::collections::BTreeMap;

use ndarray::ArrayD;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::multi_index::{enumerate_multi_indices, factorial, multi_indices_of_order, MultiIndex};
use crate::symbols::{DispersionSymbol, PhaseFunction, SymbolError};
use crate::wigner::Axis;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("quadrature domain too small: {0:.3e} of the mass lies on its boundary")]
    DomainTooSmall(f64),
    #[error("invalid density: {0}")]
    Density(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Moments `K_α` at one position, keyed by multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    dim: usize,
    max_order: u32,
    entries: BTreeMap<MultiIndex, f64>,
    normalized: bool,
    /// Width `w̃` with `|K_α| = O(w̃^{−|α|})`.
    scale: Option<f64>,
}

impl MomentTable {
    pub fn new(dim: usize, max_order: u32) -> Self {
        Self {
            dim,
            max_order,
            entries: BTreeMap::new(),
            normalized: false,
            scale: None,
        }
    }

    /// `K = {K₀ = 1}`: a bare `δ` on the Lagrangian manifold.
    pub fn delta(dim: usize) -> Self {
        let mut t = Self::new(dim, 0);
        t.set(MultiIndex::zero(dim), 1.0);
        t.normalized = true;
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn set_normalized(&mut self, normalized: bool) {
        self.normalized = normalized;
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn with_scale(mut self, w: f64) -> Self {
        self.scale = Some(w);
        self
    }

    pub fn set(&mut self, alpha: MultiIndex, value: f64) {
        assert_eq!(alpha.dim(), self.dim, "multi-index dimension");
        self.max_order = self.max_order.max(alpha.order());
        self.entries.insert(alpha, value);
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries.get(alpha).copied()
    }

    /// `K_α`, or `None` beyond the stored order. Unset entries within the
    /// stored order are zero.
    pub fn lookup(&self, alpha: &MultiIndex) -> Option<f64> {
        if alpha.order() > self.max_order {
            None
        } else {
            Some(self.get(alpha).unwrap_or(0.0))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Both sides of `Σ_{|β|=n} a^β/β! = (Σ aᵢ)ⁿ/n!`.
pub fn multinomial_reduce(a: &[f64], n: u32) -> (f64, f64) {
    let lhs = multi_indices_of_order(a.len().max(1), n)
        .iter()
        .map(|b| b.pow(a) / b.factorial())
        .sum();
    let rhs = a.iter().sum::<f64>().powi(n as i32) / factorial(n);
    (lhs, rhs)
}

/// [`multinomial_reduce`] in exact rational arithmetic.
pub fn multinomial_reduce_exact(a: &[BigRational], n: u32) -> (BigRational, BigRational) {
    let mut lhs = BigRational::zero();
    for b in multi_indices_of_order(a.len().max(1), n) {
        let mut term = BigRational::one();
        for (ai, &e) in a.iter().zip(b.components()) {
            for _ in 0..e {
                term *= ai;
            }
        }
        lhs += term / BigRational::from_integer(BigInt::from(b.factorial_exact()));
    }
    let sum: BigRational = a.iter().fold(BigRational::zero(), |acc, v| acc + v);
    let mut pow = BigRational::one();
    for _ in 0..n {
        pow *= &sum;
    }
    let n_fact = MultiIndex::new(vec![n]).factorial_exact();
    (lhs, pow / BigRational::from_integer(BigInt::from(n_fact)))
}

/// Moments of the complex-eikonal ansatz: zero at odd order and
/// `(−1)^n (k″)^α` at order `2n`.
pub fn cgo_moment_table(k_dprime: &[f64], max_order: u32) -> MomentTable {
    let dim = k_dprime.len();
    let mut table = MomentTable::new(dim, max_order);
    for alpha in enumerate_multi_indices(dim, max_order) {
        let order = alpha.order();
        let v = if order % 2 == 1 {
            0.0
        } else {
            let sign = if (order / 2) % 2 == 0 { 1.0 } else { -1.0 };
            sign * alpha.pow(k_dprime)
        };
        table.set(alpha, v);
    }
    table.set_normalized(true);
    table
}

/// A value computed from a truncated series, with the order at which the
/// series had to stop early (if any).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub truncated_at: Option<u32>,
}

type Coefficients = Vec<(MultiIndex, f64)>;

/// Taylor coefficients of `f` in `k`, dropping to order 2 when higher
/// derivatives are unavailable.
fn taylor_truncated(
    f: &PhaseFunction,
    x: &[f64],
    k: &[f64],
    order: u32,
) -> Result<(Coefficients, Option<u32>), SymbolError> {
    match f.k_taylor(x, k, order) {
        Ok(c) => Ok((c, None)),
        Err(SymbolError::DerivativeUnavailable { available, .. }) => {
            Ok((f.k_taylor(x, k, available)?, Some(available)))
        }
        Err(e) => Err(e),
    }
}

/// `Σ_β K_β/β! ∂_k^β A(x, k_c)` over the stored moments.
pub fn apply_momentum_distribution(
    table: &MomentTable,
    a: &DispersionSymbol,
    x: &[f64],
    k_center: &[f64],
) -> Result<SeriesValue, MomentError> {
    check_dim(table, a)?;
    a.eval(x, k_center)?;
    let (coeffs, truncated_at) = taylor_truncated(&a.real, x, k_center, table.max_order())?;
    let value = coeffs.iter().map(|(beta, c)| c * table.get(beta).unwrap_or(0.0)).sum();
    Ok(SeriesValue { value, truncated_at })
}

fn check_dim(table: &MomentTable, d: &DispersionSymbol) -> Result<(), MomentError> {
    if table.dim() != d.dim() {
        return Err(MomentError::DimensionMismatch {
            expected: d.dim(),
            found: table.dim(),
        });
    }
    Ok(())
}

/// Residuals of the moment hierarchy, keyed by `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResiduals {
    pub values: BTreeMap<MultiIndex, f64>,
    /// `β` whose sums needed moments beyond the table.
    pub truncated: Vec<MultiIndex>,
    /// Order at which the symbol's Taylor series was cut short.
    pub derivative_truncation: Option<u32>,
}

/// `R_β = Σ_{|α| ≤ alpha_truncation} ∂_k^α D′/α! · K_{α+β}` for `|β| ≤ beta_max`.
/// Moments beyond the table are taken as zero and reported.
pub fn dispersion_moment_residuals(
    d: &DispersionSymbol,
    x: &[f64],
    k_center: &[f64],
    table: &MomentTable,
    beta_max: u32,
    alpha_truncation: u32,
) -> Result<MomentResiduals, MomentError> {
    check_dim(table, d)?;
    d.eval(x, k_center)?;
    let (coeffs, derivative_truncation) = taylor_truncated(&d.real, x, k_center, alpha_truncation)?;
    let mut values = BTreeMap::new();
    let mut truncated = Vec::new();
    for beta in enumerate_multi_indices(d.dim(), beta_max) {
        let mut sum = 0.0;
        let mut missing = false;
        for (alpha, c) in &coeffs {
            match table.lookup(&(alpha + &beta)) {
                Some(k) => sum += c * k,
                None => missing |= *c != 0.0,
            }
        }
        if missing {
            truncated.push(beta.clone());
        }
        values.insert(beta, sum);
    }
    Ok(MomentResiduals {
        values,
        truncated,
        derivative_truncation,
    })
}

/// `(Σ_n (−1)ⁿ/(2n)! [k″·∂_k]^{2n} D′, Σ_n (−1)^{n+1}/(2n+1)! [k″·∂_k]^{2n+1} D′)`
/// for `n ≤ n_max`.
pub fn cgo_series_pair(
    d: &DispersionSymbol,
    x: &[f64],
    k: &[f64],
    k_dprime: &[f64],
    n_max: u32,
) -> Result<(f64, f64), MomentError> {
    d.eval(x, k)?;
    let dirs = d.real.directional_k(x, k, k_dprime, 2 * n_max + 1)?;
    let mut even = 0.0;
    let mut odd = 0.0;
    for n in 0..=n_max {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        even += sign * dirs[2 * n as usize] / factorial(2 * n);
        odd -= sign * dirs[2 * n as usize + 1] / factorial(2 * n + 1);
    }
    Ok((even, odd))
}

/// `Σ_{|α+β| ≤ order} ∂^α D′ ∂^β A K_{α+β} / (α! β!)`: the weak action of
/// the moment series on the product `D′A`.
pub fn moment_series(
    d: &DispersionSymbol,
    a: &DispersionSymbol,
    table: &MomentTable,
    x: &[f64],
    k_center: &[f64],
    order: u32,
) -> Result<SeriesValue, MomentError> {
    check_dim(table, d)?;
    check_dim(table, a)?;
    d.eval(x, k_center)?;
    a.eval(x, k_center)?;
    let (cd, td) = taylor_truncated(&d.real, x, k_center, order)?;
    let (ca, ta) = taylor_truncated(&a.real, x, k_center, order)?;
    let mut value = 0.0;
    for (alpha, p) in &cd {
        for (beta, q) in &ca {
            let gamma = alpha + beta;
            if gamma.order() <= order {
                value += p * q * table.lookup(&gamma).unwrap_or(0.0);
            }
        }
    }
    let truncated_at = match (td, ta) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(SeriesValue { value, truncated_at })
}

/// A normalized density `f(k̃)` sampled on a tensor grid and integrated with
/// the trapezoid rule.
#[derive(Debug, Clone)]
pub struct MomentumDensity {
    axes: Vec<Axis>,
    values: ArrayD<f64>,
    weights: ArrayD<f64>,
}

impl MomentumDensity {
    /// Samples `f` and normalizes it. Fails when more than `1e-12` of the
    /// mass sits in the boundary cells, a proxy for the truncated tail.
    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> f64) -> Result<Self, MomentError> {
        if axes.is_empty() || axes.iter().any(|a| a.n < 3) {
            return Err(MomentError::Density("need at least three samples per axis".into()));
        }
        let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
        let mut point = vec![0.0; axes.len()];
        let values = ArrayD::from_shape_fn(shape.clone(), |idx| {
            for (d, p) in point.iter_mut().enumerate() {
                *p = axes[d].coord(idx[d]);
            }
            f(&point)
        });
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MomentError::Density("non-finite sample".into()));
        }
        let weights = ArrayD::from_shape_fn(shape, |idx| {
            axes.iter()
                .enumerate()
                .map(|(d, a)| {
                    let edge = idx[d] == 0 || idx[d] == a.n - 1;
                    a.step * if edge { 0.5 } else { 1.0 }
                })
                .product()
        });
        let mass: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
        if !(mass > 0.0) {
            return Err(MomentError::Density(format!("total mass {mass} is not positive")));
        }
        let mut boundary = 0.0;
        for (idx, v) in values.indexed_iter() {
            let on_edge = (0..axes.len()).any(|d| idx[d] == 0 || idx[d] == axes[d].n - 1);
            if on_edge {
                boundary += v.abs() * axes.iter().map(|a| a.step).product::<f64>();
            }
        }
        if boundary / mass > 1e-12 {
            return Err(MomentError::DomainTooSmall(boundary / mass));
        }
        Ok(Self {
            axes,
            values: values / mass,
            weights,
        })
    }

    /// Isotropic Gaussian of standard deviation `sigma` on `±half_width·σ`
    /// with `n` samples per axis.
    pub fn gaussian(dim: usize, sigma: f64, half_width: f64, n: usize) -> Result<Self, MomentError> {
        let axis = Axis::new(-half_width * sigma, 2.0 * half_width * sigma / (n - 1) as f64, n);
        Self::from_fn(vec![axis; dim], |k| {
            (-k.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp()
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// `∫ f(k̃) g(k̃) dk̃`.
    pub fn integrate(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut point = vec![0.0; self.axes.len()];
        let mut acc = 0.0;
        for ((idx, v), w) in self.values.indexed_iter().zip(self.weights.iter()) {
            if *v == 0.0 {
                continue;
            }
            for (d, p) in point.iter_mut().enumerate() {
                *p = self.axes[d].coord(idx[d]);
            }
            acc += v * w * g(&point);
        }
        acc
    }

    /// `K_α = ∫ f k̃^α` for `|α| ≤ max_order`.
    pub fn moments(&self, max_order: u32) -> MomentTable {
        let mut table = MomentTable::new(self.dim(), max_order);
        for alpha in enumerate_multi_indices(self.dim(), max_order) {
            let v = self.integrate(|k| alpha.pow(k));
            table.set(alpha, v);
        }
        table.set_normalized(true);
        table
    }
}

/// `∫ f(k̃) D′(x, k_c + k̃) A(x, k_c + k̃) dk̃` by direct quadrature.
pub fn quadrature_oracle(
    density: &MomentumDensity,
    d: &DispersionSymbol,
    a: &DispersionSymbol,
    x: &[f64],
    k_center: &[f64],
) -> Result<f64, MomentError> {
    if density.dim() != d.dim() || d.dim() != a.dim() {
        return Err(MomentError::DimensionMismatch {
            expected: d.dim(),
            found: density.dim(),
        });
    }
    let mut err = None;
    let mut shifted = vec![0.0; k_center.len()];
    let v = density.integrate(|kt| {
        for (s, (c, t)) in shifted.iter_mut().zip(k_center.iter().zip(kt)) {
            *s = c + t;
        }
        match (d.eval(x, &shifted), a.eval(x, &shifted)) {
            (Ok((dv, _)), Ok((av, _))) => dv * av,
            (Err(e), _) | (_, Err(e)) => {
                err.get_or_insert(e);
                0.0
            }
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(v),
    }
}
