//! Symbol expressions over phase-space coordinates.
//!
//! Built-in symbols are written as expression trees in the position
//! variables `x_i` and wavevector variables `k_i`. The same tree evaluates
//! over reals, complex wavevectors and Taylor jets, and expands to an exact
//! [`Polynomial`] when it is polynomial.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::poly::Polynomial;
use super::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    X(usize),
    K(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Powi(Box<Expr>, i32),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

pub fn x(i: usize) -> Expr {
    Expr::X(i)
}

pub fn k(i: usize) -> Expr {
    Expr::K(i)
}

pub fn c(v: f64) -> Expr {
    Expr::Const(v)
}

impl Expr {
    pub fn powi(self, n: i32) -> Expr {
        Expr::Powi(Box::new(self), n)
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    /// Evaluate with `x` and `k` given in any scalar type. At least one of
    /// the slices must be non-empty so constants can be lifted.
    pub fn eval<T: Scalar>(&self, xs: &[T], ks: &[T]) -> T {
        let template = xs.first().or(ks.first()).expect("empty phase-space point");
        self.eval_with(xs, ks, template)
    }

    fn eval_with<T: Scalar>(&self, xs: &[T], ks: &[T], t: &T) -> T {
        match self {
            Expr::Const(v) => t.lift(*v),
            Expr::X(i) => xs[*i].clone(),
            Expr::K(i) => ks[*i].clone(),
            Expr::Add(a, b) => a.eval_with(xs, ks, t) + b.eval_with(xs, ks, t),
            Expr::Sub(a, b) => a.eval_with(xs, ks, t) - b.eval_with(xs, ks, t),
            Expr::Mul(a, b) => a.eval_with(xs, ks, t) * b.eval_with(xs, ks, t),
            Expr::Div(a, b) => a.eval_with(xs, ks, t) / b.eval_with(xs, ks, t),
            Expr::Neg(a) => -a.eval_with(xs, ks, t),
            Expr::Powi(a, n) => a.eval_with(xs, ks, t).powi(*n),
            Expr::Sqrt(a) => a.eval_with(xs, ks, t).sqrt(),
            Expr::Exp(a) => a.eval_with(xs, ks, t).exp(),
            Expr::Ln(a) => a.eval_with(xs, ks, t).ln(),
            Expr::Sin(a) => a.eval_with(xs, ks, t).sin(),
            Expr::Cos(a) => a.eval_with(xs, ks, t).cos(),
        }
    }

    /// Largest phase-space dimension referenced (`max index + 1`).
    pub fn min_dim(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::X(i) | Expr::K(i) => i + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.min_dim().max(b.min_dim()),
            Expr::Neg(a)
            | Expr::Powi(a, _)
            | Expr::Sqrt(a)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Sin(a)
            | Expr::Cos(a) => a.min_dim(),
        }
    }

    pub fn depends_on_k(&self) -> bool {
        self.any_leaf(&|e| matches!(e, Expr::K(_)))
    }

    pub fn depends_on_x(&self, i: usize) -> bool {
        self.any_leaf(&|e| *e == Expr::X(i))
    }

    fn any_leaf(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        match self {
            Expr::Const(_) | Expr::X(_) | Expr::K(_) => pred(self),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.any_leaf(pred) || b.any_leaf(pred)
            }
            Expr::Neg(a)
            | Expr::Powi(a, _)
            | Expr::Sqrt(a)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Sin(a)
            | Expr::Cos(a) => a.any_leaf(pred),
        }
    }

    /// True when, for every fixed `x`, the expression is a polynomial in `k`
    /// and therefore extends to an entire function of complex `k`.
    pub fn is_polynomial_in_k(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::X(_) | Expr::K(_) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_polynomial_in_k() && b.is_polynomial_in_k(),
            Expr::Div(a, b) => a.is_polynomial_in_k() && !b.depends_on_k(),
            Expr::Neg(a) => a.is_polynomial_in_k(),
            Expr::Powi(a, n) => !a.depends_on_k() || (*n >= 0 && a.is_polynomial_in_k()),
            Expr::Sqrt(a) | Expr::Exp(a) | Expr::Ln(a) | Expr::Sin(a) | Expr::Cos(a) => !a.depends_on_k(),
        }
    }

    /// Expand into an exact polynomial in `(x, k)`, if the expression is one.
    pub fn to_polynomial(&self, dim: usize) -> Option<Polynomial> {
        Some(match self {
            Expr::Const(v) => Polynomial::constant(dim, *v),
            Expr::X(i) => Polynomial::x_var(dim, *i),
            Expr::K(i) => Polynomial::k_var(dim, *i),
            Expr::Add(a, b) => &a.to_polynomial(dim)? + &b.to_polynomial(dim)?,
            Expr::Sub(a, b) => &a.to_polynomial(dim)? - &b.to_polynomial(dim)?,
            Expr::Mul(a, b) => &a.to_polynomial(dim)? * &b.to_polynomial(dim)?,
            Expr::Div(a, b) => {
                let denom = b.to_polynomial(dim)?.as_constant()?;
                a.to_polynomial(dim)?.scale(1.0 / denom)
            }
            Expr::Neg(a) => a.to_polynomial(dim)?.scale(-1.0),
            Expr::Powi(a, n) => {
                let base = a.to_polynomial(dim)?;
                if *n >= 0 {
                    base.powi(*n as u32)
                } else {
                    Polynomial::constant(dim, base.as_constant()?.powi(*n))
                }
            }
            Expr::Sqrt(a) | Expr::Exp(a) | Expr::Ln(a) | Expr::Sin(a) | Expr::Cos(a) => {
                let v = a.to_polynomial(dim)?.as_constant()?;
                let r = match self {
                    Expr::Sqrt(_) => v.sqrt(),
                    Expr::Exp(_) => v.exp(),
                    Expr::Ln(_) => v.ln(),
                    Expr::Sin(_) => v.sin(),
                    _ => v.cos(),
                };
                Polynomial::constant(dim, r)
            }
        })
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$variant(Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(Expr::Const(self)), Box::new(rhs))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn polynomial_detection() {
        let helm = -(k(0).powi(2) + k(1).powi(2)) + 4.0 * (1.0 - x(0).powi(2));
        assert!(helm.is_polynomial_in_k());
        assert!(helm.to_polynomial(2).is_some());
        let branch = k(1) - (1.0 - k(0).powi(2)).sqrt();
        assert!(!branch.is_polynomial_in_k());
        assert!(branch.to_polynomial(2).is_none());
        // x-dependence under a square root is still polynomial in k
        let graded = k(0) * (1.0 + x(0).powi(2)).sqrt();
        assert!(graded.is_polynomial_in_k());
        assert!(graded.to_polynomial(1).is_none());
    }

    #[test]
    fn complex_evaluation() {
        let e = -k(0).powi(2);
        let v: Complex64 = e.eval(&[Complex64::new(0.0, 0.0)], &[Complex64::new(2.0, 0.5)]);
        // -(k + i q)^2 = -k^2 + q^2 - 2 i k q
        assert!((v - Complex64::new(-4.0 + 0.25, -2.0)).norm() < 1e-15);
    }
}
