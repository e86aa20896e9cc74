//! Dispersion symbols on phase space.
//!
//! A symbol is a function of position `x ∈ R^N` and wavevector `k ∈ R^N`.
//! Analytic symbols are stored as expression trees and differentiated
//! exactly with Taylor jets; when the tree is polynomial it is also expanded
//! into a [`Polynomial`] for fast gradients and complex extension. Opaque
//! closures are differentiated with central differences.

mod expr;
mod jet;
mod poly;
mod scalar;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use expr::{c, k, x, Expr};
pub use jet::{Jet, JetSpace};
pub use poly::{Polynomial, Term};
pub use scalar::Scalar;

use crate::multi_index::{binomial, enumerate_multi_indices, MultiIndex};

/// Relative finite-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error("symbol `{name}` is not finite at x={x:?}, k={k:?}")]
    NonFinite { name: String, x: Vec<f64>, k: Vec<f64> },
    #[error("symbol `{0}` is not polynomial in k and has no complex extension")]
    UnsupportedExtension(String),
    #[error("derivatives of order {requested} unavailable (at most {available})")]
    DerivativeUnavailable { requested: u32, available: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("invalid medium: {0}")]
    InvalidMedium(String),
}

type Closure = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Zero,
    Analytic { expr: Expr, poly: Option<Polynomial> },
    Opaque { f: Closure, length: f64 },
}

/// A real function on `R^N × R^N`.
#[derive(Clone)]
pub struct PhaseFunction {
    dim: usize,
    repr: Repr,
}

impl fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero => write!(f, "PhaseFunction::Zero({})", self.dim),
            Repr::Analytic { expr, .. } => write!(f, "PhaseFunction::Analytic({expr:?})"),
            Repr::Opaque { length, .. } => write!(f, "PhaseFunction::Opaque(L={length})"),
        }
    }
}

/// First and second partial derivatives at one phase-space point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_k: Vec<f64>,
    /// `hess_kk[i][j] = ∂²/∂kᵢ∂kⱼ`; empty when only first order was requested.
    pub hess_kk: Vec<Vec<f64>>,
    /// `mixed_xk[i][j] = ∂²/∂xᵢ∂kⱼ`.
    pub mixed_xk: Vec<Vec<f64>>,
    pub hess_xx: Vec<Vec<f64>>,
}

impl PhaseFunction {
    pub fn zero(dim: usize) -> Self {
        Self { dim, repr: Repr::Zero }
    }

    pub fn from_expr(dim: usize, expr: Expr) -> Result<Self, SymbolError> {
        if expr.min_dim() > dim {
            return Err(SymbolError::DimensionMismatch {
                expected: dim,
                found: expr.min_dim(),
            });
        }
        let poly = expr.to_polynomial(dim);
        Ok(Self {
            dim,
            repr: Repr::Analytic { expr, poly },
        })
    }

    pub fn from_polynomial(poly: Polynomial) -> Self {
        let dim = poly.dim();
        let mut expr = c(0.0);
        for t in poly.terms() {
            let mut term = c(t.coef);
            for i in 0..dim {
                if t.xp[i] > 0 {
                    term = term * x(i).powi(t.xp[i] as i32);
                }
                if t.kp[i] > 0 {
                    term = term * k(i).powi(t.kp[i] as i32);
                }
            }
            expr = expr + term;
        }
        Self {
            dim,
            repr: Repr::Analytic { expr, poly: Some(poly) },
        }
    }

    /// A closure without analytic structure. `length` sets the
    /// finite-difference step in `x`.
    pub fn opaque<F>(dim: usize, length: f64, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            repr: Repr::Opaque { f: Arc::new(f), length },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Zero => true,
            Repr::Analytic { poly: Some(p), .. } => p.terms().is_empty(),
            _ => false,
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match &self.repr {
            Repr::Analytic { poly, .. } => poly.as_ref(),
            _ => None,
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Analytic { expr, .. } => Some(expr),
            _ => None,
        }
    }

    pub fn is_polynomial_in_k(&self) -> bool {
        match &self.repr {
            Repr::Zero => true,
            Repr::Analytic { expr, .. } => expr.is_polynomial_in_k(),
            Repr::Opaque { .. } => false,
        }
    }

    /// Whether the function may vary with `x_i`. Opaque closures are assumed
    /// to.
    pub fn depends_on_x(&self, i: usize) -> bool {
        match &self.repr {
            Repr::Zero => false,
            Repr::Analytic { poly: Some(p), .. } => p.depends_on_x(i),
            Repr::Analytic { expr, .. } => expr.depends_on_x(i),
            Repr::Opaque { .. } => true,
        }
    }

    pub fn value(&self, x: &[f64], k: &[f64]) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Analytic { poly: Some(p), .. } => p.eval(x, k),
            Repr::Analytic { expr, .. } => expr.eval(x, k),
            Repr::Opaque { f, .. } => f(x, k),
        }
    }

    /// Value, writing `∂/∂x` into `gx` and `∂/∂k` into `gk`.
    pub fn value_and_gradient(&self, x: &[f64], k: &[f64], gx: &mut [f64], gk: &mut [f64]) -> f64 {
        let n = self.dim;
        match &self.repr {
            Repr::Zero => {
                gx[..n].iter_mut().for_each(|g| *g = 0.0);
                gk[..n].iter_mut().for_each(|g| *g = 0.0);
                0.0
            }
            Repr::Analytic { poly: Some(p), .. } => p.value_and_gradient(x, k, gx, gk),
            Repr::Analytic { expr, .. } => {
                let jet = self.phase_jet(expr, x, k, 1);
                for i in 0..n {
                    gx[i] = jet.derivative(&MultiIndex::unit(2 * n, i));
                    gk[i] = jet.derivative(&MultiIndex::unit(2 * n, n + i));
                }
                jet.value()
            }
            Repr::Opaque { .. } => {
                let (hx, hk) = self.fd_steps(k);
                let mut xp = x.to_vec();
                let mut kp = k.to_vec();
                for i in 0..n {
                    gx[i] = central(
                        |t| {
                            xp[i] = x[i] + t;
                            self.value(&xp, k)
                        },
                        hx,
                    );
                    xp[i] = x[i];
                    gk[i] = central(
                        |t| {
                            kp[i] = k[i] + t;
                            self.value(x, &kp)
                        },
                        hk[i],
                    );
                    kp[i] = k[i];
                }
                self.value(x, k)
            }
        }
    }

    fn phase_jet(&self, expr: &Expr, x: &[f64], k: &[f64], order: u32) -> Jet {
        let n = self.dim;
        let space = JetSpace::cached(2 * n, order);
        let xs: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, i, x[i])).collect();
        let ks: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, n + i, k[i])).collect();
        expr.eval(&xs, &ks)
    }

    fn fd_steps(&self, k: &[f64]) -> (f64, Vec<f64>) {
        let length = match &self.repr {
            Repr::Opaque { length, .. } => *length,
            _ => 1.0,
        };
        let hx = FD_STEP * if length.is_finite() { length } else { 1.0 };
        let hk = k.iter().map(|ki| FD_STEP * ki.abs().max(1.0)).collect();
        (hx, hk)
    }

    /// Partial derivatives up to total order `order ≤ 2`. Analytic functions
    /// are differentiated exactly; opaque ones by central differences with
    /// steps `1e-5·max(1,|k|)` and `1e-5·L`.
    pub fn derivatives(&self, x: &[f64], k: &[f64], order: u32) -> Result<Derivatives, SymbolError> {
        if order > 2 {
            return Err(SymbolError::DerivativeUnavailable {
                requested: order,
                available: 2,
            });
        }
        let n = self.dim;
        let mut d = Derivatives {
            value: 0.0,
            grad_x: vec![0.0; n],
            grad_k: vec![0.0; n],
            hess_kk: Vec::new(),
            mixed_xk: Vec::new(),
            hess_xx: Vec::new(),
        };
        if order == 2 {
            d.hess_kk = vec![vec![0.0; n]; n];
            d.mixed_xk = vec![vec![0.0; n]; n];
            d.hess_xx = vec![vec![0.0; n]; n];
        }
        match &self.repr {
            Repr::Zero => {}
            Repr::Analytic { expr, .. } => {
                let jet = self.phase_jet(expr, x, k, order);
                d.value = jet.value();
                let pair = |a: usize, b: usize| {
                    let mut idx = vec![0u32; 2 * n];
                    idx[a] += 1;
                    idx[b] += 1;
                    jet.derivative(&MultiIndex::new(idx))
                };
                for i in 0..n {
                    d.grad_x[i] = jet.derivative(&MultiIndex::unit(2 * n, i));
                    d.grad_k[i] = jet.derivative(&MultiIndex::unit(2 * n, n + i));
                    if order == 2 {
                        for j in 0..n {
                            d.hess_kk[i][j] = pair(n + i, n + j);
                            d.mixed_xk[i][j] = pair(i, n + j);
                            d.hess_xx[i][j] = pair(i, j);
                        }
                    }
                }
            }
            Repr::Opaque { .. } => {
                d.value = self.value(x, k);
                let (gx, gk) = (&mut d.grad_x, &mut d.grad_k);
                self.value_and_gradient(x, k, gx, gk);
                if order == 2 {
                    let (hx, hk) = self.fd_steps(k);
                    let mut steps = vec![hx; n];
                    steps.extend(hk);
                    let point: Vec<f64> = x.iter().chain(k).copied().collect();
                    let f = |p: &[f64]| self.value(&p[..n], &p[n..]);
                    for i in 0..n {
                        for j in 0..n {
                            d.hess_kk[i][j] = second_difference(&f, &point, &steps, n + i, n + j);
                            d.mixed_xk[i][j] = second_difference(&f, &point, &steps, i, n + j);
                            d.hess_xx[i][j] = second_difference(&f, &point, &steps, i, j);
                        }
                    }
                }
            }
        }
        Ok(d)
    }

    /// Normalized Taylor coefficients `∂_k^α f / α!` at `(x, k)` for all
    /// `|α| ≤ order`, in graded order.
    pub fn k_taylor(&self, x: &[f64], k: &[f64], order: u32) -> Result<Vec<(MultiIndex, f64)>, SymbolError> {
        let n = self.dim;
        let indices = enumerate_multi_indices(n, order);
        match &self.repr {
            Repr::Zero => Ok(indices.into_iter().map(|a| (a, 0.0)).collect()),
            Repr::Analytic { poly: Some(p), .. } => {
                let zero = MultiIndex::zero(n);
                Ok(indices
                    .into_iter()
                    .map(|a| {
                        let v = p.partial(&zero, &a).eval(x, k) / a.factorial();
                        (a, v)
                    })
                    .collect())
            }
            Repr::Analytic { expr, .. } => {
                let space = JetSpace::cached(n, order);
                let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(&space, v)).collect();
                let ks: Vec<Jet> = (0..n).map(|i| Jet::variable(&space, i, k[i])).collect();
                let jet = expr.eval(&xs, &ks);
                Ok(space
                    .indices()
                    .iter()
                    .cloned()
                    .zip(jet.coefficients().iter().copied())
                    .collect())
            }
            Repr::Opaque { .. } => {
                let d = self.derivatives(x, k, order)?;
                Ok(indices
                    .into_iter()
                    .map(|a| {
                        let nz: Vec<usize> = (0..n)
                            .flat_map(|i| std::iter::repeat_n(i, a.components()[i] as usize))
                            .collect();
                        let v = match nz.as_slice() {
                            [] => d.value,
                            [i] => d.grad_k[*i],
                            [i, j] => d.hess_kk[*i][*j],
                            _ => unreachable!(),
                        };
                        let f = a.factorial();
                        (a, v / f)
                    })
                    .collect())
            }
        }
    }

    /// Derivatives `dʲ/dtʲ f(x, k + t·v)` at `t = 0` for `j = 0..=order`.
    pub fn directional_k(&self, x: &[f64], k: &[f64], v: &[f64], order: u32) -> Result<Vec<f64>, SymbolError> {
        match &self.repr {
            Repr::Zero => Ok(vec![0.0; order as usize + 1]),
            Repr::Analytic { expr, .. } => {
                let space = JetSpace::cached(1, order);
                let t = Jet::variable(&space, 0, 0.0);
                let xs: Vec<Jet> = x.iter().map(|&xi| Jet::constant(&space, xi)).collect();
                let ks: Vec<Jet> = k
                    .iter()
                    .zip(v)
                    .map(|(&ki, &vi)| Jet::constant(&space, ki) + Jet::constant(&space, vi) * t.clone())
                    .collect();
                let jet = expr.eval(&xs, &ks);
                Ok(jet
                    .coefficients()
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * crate::multi_index::factorial(j as u32))
                    .collect())
            }
            Repr::Opaque { .. } => {
                let vnorm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let knorm = k.iter().map(|a| a * a).sum::<f64>().sqrt();
                let at = |t: f64| {
                    let kt: Vec<f64> = k.iter().zip(v).map(|(a, b)| a + t * b).collect();
                    self.value(x, &kt)
                };
                let mut out = Vec::with_capacity(order as usize + 1);
                for j in 0..=order {
                    // nested central stencil; O(h²) truncation balanced against roundoff
                    let h = f64::EPSILON.powf(1.0 / f64::from(j + 2)) * knorm.max(1.0) / vnorm;
                    let mut acc = 0.0;
                    for i in 0..=j {
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * binomial(j, i) * at((f64::from(j) / 2.0 - f64::from(i)) * h);
                    }
                    out.push(acc / h.powi(j as i32));
                }
                Ok(out)
            }
        }
    }

    /// Value at real `x` and complex `k`.
    pub fn extend_complex(&self, x: &[f64], kbar: &[Complex64]) -> Option<Complex64> {
        match &self.repr {
            Repr::Zero => Some(Complex64::new(0.0, 0.0)),
            Repr::Analytic { poly: Some(p), .. } => Some(p.eval_complex_k(x, kbar)),
            Repr::Analytic { expr, .. } if expr.is_polynomial_in_k() => {
                let xs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                Some(expr.eval(&xs, kbar))
            }
            _ => None,
        }
    }
}

fn central(mut f: impl FnMut(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

fn second_difference(f: &impl Fn(&[f64]) -> f64, p: &[f64], steps: &[f64], a: usize, b: usize) -> f64 {
    // second derivatives use a wider step to keep roundoff below truncation
    let (ha, hb) = (steps[a] * 100.0, steps[b] * 100.0);
    let mut q = p.to_vec();
    let mut at = |da: f64, db: f64| {
        q.copy_from_slice(p);
        q[a] += da;
        q[b] += db;
        f(&q)
    };
    if a == b {
        (at(ha, 0.0) - 2.0 * at(0.0, 0.0) + at(-ha, 0.0)) / (ha * ha)
    } else {
        (at(ha, hb) - at(ha, -hb) - at(-ha, hb) + at(-ha, -hb)) / (4.0 * ha * hb)
    }
}

/// Characteristic scales used to normalize residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub wavenumber: f64,
    pub length: f64,
}

/// A dispersion symbol `D = D′ + iD″` of order `m`.
#[derive(Debug, Clone)]
pub struct DispersionSymbol {
    pub name: String,
    pub order: i32,
    pub real: PhaseFunction,
    pub imag: PhaseFunction,
    pub scales: Scales,
}

impl DispersionSymbol {
    pub fn new(
        name: impl Into<String>,
        order: i32,
        real: PhaseFunction,
        imag: PhaseFunction,
        scales: Scales,
    ) -> Result<Self, SymbolError> {
        if real.dim() != imag.dim() {
            return Err(SymbolError::DimensionMismatch {
                expected: real.dim(),
                found: imag.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            order,
            real,
            imag,
            scales,
        })
    }

    /// Lossless symbol with `D″ = 0`.
    pub fn lossless(name: impl Into<String>, order: i32, real: PhaseFunction, scales: Scales) -> Self {
        let dim = real.dim();
        Self {
            name: name.into(),
            order,
            real,
            imag: PhaseFunction::zero(dim),
            scales,
        }
    }

    pub fn dim(&self) -> usize {
        self.real.dim()
    }

    /// `k0^m`, the natural size of `D′`.
    pub fn scale(&self) -> f64 {
        self.scales.wavenumber.powi(self.order)
    }

    pub fn eval(&self, x: &[f64], k: &[f64]) -> Result<(f64, f64), SymbolError> {
        self.check_dims(x, k)?;
        let (re, im) = (self.real.value(x, k), self.imag.value(x, k));
        if re.is_finite() && im.is_finite() {
            Ok((re, im))
        } else {
            Err(SymbolError::NonFinite {
                name: self.name.clone(),
                x: x.to_vec(),
                k: k.to_vec(),
            })
        }
    }

    /// Partials of `D′` up to total order 2.
    pub fn derivatives(&self, x: &[f64], k: &[f64], order: u32) -> Result<Derivatives, SymbolError> {
        self.eval(x, k)?;
        self.real.derivatives(x, k, order)
    }

    /// `D′` at complex wavevector `kbar`.
    pub fn extend_complex(&self, x: &[f64], kbar: &[Complex64]) -> Result<Complex64, SymbolError> {
        if kbar.len() != self.dim() {
            return Err(SymbolError::DimensionMismatch {
                expected: self.dim(),
                found: kbar.len(),
            });
        }
        self.real
            .extend_complex(x, kbar)
            .ok_or_else(|| SymbolError::UnsupportedExtension(self.name.clone()))
    }

    fn check_dims(&self, x: &[f64], k: &[f64]) -> Result<(), SymbolError> {
        for len in [x.len(), k.len()] {
            if len != self.dim() {
                return Err(SymbolError::DimensionMismatch {
                    expected: self.dim(),
                    found: len,
                });
            }
        }
        Ok(())
    }
}

/// Parameters of a lens-like medium `n²(x) = n0²(1 − x²/L²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParameters {
    pub k0: f64,
    /// Inhomogeneity scale; `f64::INFINITY` is a homogeneous medium.
    pub length: f64,
    pub n0: f64,
}

impl MediumParameters {
    pub fn new(k0: f64, length: f64, n0: f64) -> Result<Self, SymbolError> {
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(SymbolError::InvalidMedium(format!("k0 must be positive, got {k0}")));
        }
        if !(length > 0.0) {
            return Err(SymbolError::InvalidMedium(format!("L must be positive, got {length}")));
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(SymbolError::InvalidMedium(format!("n0 must be positive, got {n0}")));
        }
        Ok(Self { k0, length, n0 })
    }

    /// `zR = k0 w0² / 2`.
    pub fn rayleigh_range(&self, w0: f64) -> f64 {
        self.k0 * w0 * w0 / 2.0
    }

    /// Angular frequency `ω = k0 c / n0`.
    pub fn omega(&self, c: f64) -> f64 {
        self.k0 * c / self.n0
    }

    fn inv_length_sq(&self) -> f64 {
        1.0 / (self.length * self.length)
    }

    pub fn scales(&self) -> Scales {
        Scales {
            wavenumber: self.k0,
            length: self.length,
        }
    }
}

pub const BUILTIN_SYMBOLS: &[&str] = &[
    "helmholtz_lenslike",
    "paraxial_oscillator",
    "free_space",
    "lenslike_progressive",
];

/// `D′ = −(kx² + kz²) + k0²(1 − x²/L²)` on `(x, z)`.
pub fn helmholtz_lenslike(m: &MediumParameters) -> DispersionSymbol {
    let k0sq = m.k0 * m.k0;
    let e = -(k(0).powi(2) + k(1).powi(2)) + k0sq - k0sq * m.inv_length_sq() * x(0).powi(2);
    analytic("helmholtz_lenslike", 2, e, m)
}

/// Paraxial one-way symbol `D′ = kz − k0 + kx²/(2k0) + k0 x²/(2L²)`.
pub fn paraxial_oscillator(m: &MediumParameters) -> DispersionSymbol {
    let e = k(1) - m.k0 + k(0).powi(2) / (2.0 * m.k0) + (m.k0 * m.inv_length_sq() / 2.0) * x(0).powi(2);
    analytic("paraxial_oscillator", 1, e, m)
}

/// `D′ = −(kx² + kz²) + k0²`.
pub fn free_space(m: &MediumParameters) -> DispersionSymbol {
    let e = -(k(0).powi(2) + k(1).powi(2)) + m.k0 * m.k0;
    analytic("free_space", 2, e, m)
}

/// Forward branch of the lens-like medium,
/// `D′ = kz − √(k0²(1 − x²/L²) − kx²)`. Not polynomial in `k`.
pub fn lenslike_progressive(m: &MediumParameters) -> DispersionSymbol {
    let k0sq = m.k0 * m.k0;
    let radicand = k0sq - k0sq * m.inv_length_sq() * x(0).powi(2) - k(0).powi(2);
    analytic("lenslike_progressive", 1, k(1) - radicand.sqrt(), m)
}

fn analytic(name: &str, order: i32, e: Expr, m: &MediumParameters) -> DispersionSymbol {
    let real = PhaseFunction::from_expr(2, e).expect("built-in symbols are two-dimensional");
    DispersionSymbol::lossless(name, order, real, m.scales())
}

pub fn builtin(name: &str, m: &MediumParameters) -> Result<DispersionSymbol, SymbolError> {
    match name {
        "helmholtz_lenslike" => Ok(helmholtz_lenslike(m)),
        "paraxial_oscillator" => Ok(paraxial_oscillator(m)),
        "free_space" => Ok(free_space(m)),
        "lenslike_progressive" => Ok(lenslike_progressive(m)),
        _ => Err(SymbolError::UnknownSymbol(name.to_string())),
    }
}

/// `{f, g} = Σᵢ (∂f/∂xᵢ ∂g/∂kᵢ − ∂f/∂kᵢ ∂g/∂xᵢ)`.
pub fn poisson_bracket(f: &PhaseFunction, g: &PhaseFunction, x: &[f64], k: &[f64]) -> f64 {
    let n = f.dim();
    let (mut fx, mut fk) = (vec![0.0; n], vec![0.0; n]);
    let (mut gx, mut gk) = (vec![0.0; n], vec![0.0; n]);
    f.value_and_gradient(x, k, &mut fx, &mut fk);
    g.value_and_gradient(x, k, &mut gx, &mut gk);
    (0..n).map(|i| fx[i] * gk[i] - fk[i] * gx[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParameters {
        MediumParameters::new(50.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn lenslike_values() {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        assert_eq!(d.eval(&[0.0, 0.0], &[0.0, m.k0]).unwrap().0, 0.0);
        assert_eq!(d.eval(&[m.length, 0.3], &[0.0, 0.0]).unwrap().0, 0.0);
        let v = d.eval(&[0.0, 0.0], &[0.1 * m.k0, m.k0]).unwrap().0;
        assert!((v + 0.01 * m.k0 * m.k0).abs() < 1e-10);
    }

    #[test]
    fn lenslike_derivatives() {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        let der = d.derivatives(&[0.3, 0.0], &[0.0, m.k0], 2).unwrap();
        assert!((der.grad_k[1] + 2.0 * m.k0).abs() < 1e-12);
        assert!((der.hess_kk[0][0] + 2.0).abs() < 1e-12);
        let want = -2.0 * m.k0 * m.k0 * 0.3 / (m.length * m.length);
        assert!((der.grad_x[0] - want).abs() < 1e-10);
    }

    #[test]
    fn complex_extension_on_axis() {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        let q = 3.0;
        let v = d
            .extend_complex(&[0.0, 0.0], &[Complex64::new(0.0, q), Complex64::new(m.k0, 0.0)])
            .unwrap();
        assert!((v - Complex64::new(q * q, 0.0)).norm() < 1e-10);
        let err = lenslike_progressive(&m).extend_complex(&[0.0, 0.0], &[Complex64::new(0.0, 0.0); 2]);
        assert!(matches!(err, Err(SymbolError::UnsupportedExtension(_))));
    }

    #[test]
    fn bracket_of_x_and_k_squared() {
        let f = PhaseFunction::from_expr(1, x(0)).unwrap();
        let g = PhaseFunction::from_expr(1, k(0).powi(2)).unwrap();
        assert_eq!(poisson_bracket(&f, &g, &[0.7], &[3.0]), 6.0);
    }

    #[test]
    fn opaque_matches_analytic() {
        let m = medium();
        let d = lenslike_progressive(&m);
        let e = d.real.as_expr().unwrap().clone();
        let opaque = PhaseFunction::opaque(2, m.length, move |x, k| e.eval(x, k));
        let (xp, kp) = ([0.2, 0.0], [3.0, 49.0]);
        let a = d.real.derivatives(&xp, &kp, 2).unwrap();
        let b = opaque.derivatives(&xp, &kp, 2).unwrap();
        for i in 0..2 {
            assert!((a.grad_x[i] - b.grad_x[i]).abs() < 1e-6 * (1.0 + a.grad_x[i].abs()));
            assert!((a.grad_k[i] - b.grad_k[i]).abs() < 1e-6);
            for j in 0..2 {
                assert!((a.hess_kk[i][j] - b.hess_kk[i][j]).abs() < 1e-4);
            }
        }
        let dir_a = d.real.directional_k(&xp, &kp, &[1.0, 0.0], 2).unwrap();
        let dir_b = opaque.directional_k(&xp, &kp, &[1.0, 0.0], 2).unwrap();
        for (p, q) in dir_a.iter().zip(&dir_b) {
            assert!((p - q).abs() < 1e-4 * (1.0 + p.abs()));
        }
        assert!(opaque.k_taylor(&xp, &kp, 3).is_err());
    }

    #[test]
    fn taylor_coefficients_agree_between_routes() {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        let via_poly = d.real.k_taylor(&[0.1, 0.0], &[1.0, 40.0], 3).unwrap();
        let e = d.real.as_expr().unwrap().clone();
        // sqrt of a square keeps the expression off the polynomial path
        let wrapped = PhaseFunction::from_expr(2, (e.powi(2)).sqrt()).unwrap();
        assert!(wrapped.as_polynomial().is_none());
        let neg = d.real.value(&[0.1, 0.0], &[1.0, 40.0]) < 0.0;
        let via_jet = wrapped.k_taylor(&[0.1, 0.0], &[1.0, 40.0], 3).unwrap();
        for ((a, p), (b, q)) in via_poly.iter().zip(&via_jet) {
            assert_eq!(a, b);
            let q = if neg { -q } else { *q };
            assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()), "{a}: {p} vs {q}");
        }
    }
}
