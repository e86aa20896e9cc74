use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::multi_index::{binomial, MultiIndex};

/// One monomial `coef · x^xp · k^kp`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub xp: Vec<u32>,
    pub kp: Vec<u32>,
}

/// A real polynomial in phase-space variables `(x, k) ∈ R^N × R^N`, with
/// like terms merged.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Term>,
    plan: GradientPlan,
}

/// Flattened value and gradient monomials. Variables are numbered `x`
/// first, then `k`; gradient slot `v` holds `∂/∂var_v`.
#[derive(Clone, Debug, PartialEq, Default)]
struct GradientPlan {
    // (slot or usize::MAX for the value, coef, factor range)
    monos: Vec<(usize, f64, u32, u32)>,
    // (variable, exponent)
    factors: Vec<(u8, u8)>,
    max_exp: usize,
}

impl GradientPlan {
    fn new(dim: usize, terms: &[Term]) -> Self {
        let mut plan = Self::default();
        let exps = |t: &Term| -> Vec<u32> { t.xp.iter().chain(&t.kp).copied().collect() };
        let push = |plan: &mut Self, slot: usize, coef: f64, e: &[u32]| {
            let start = plan.factors.len() as u32;
            for (v, &p) in e.iter().enumerate() {
                if p > 0 {
                    plan.factors.push((v as u8, p as u8));
                    plan.max_exp = plan.max_exp.max(p as usize);
                }
            }
            plan.monos.push((slot, coef, start, plan.factors.len() as u32));
        };
        for t in terms {
            let e = exps(t);
            push(&mut plan, usize::MAX, t.coef, &e);
            for v in 0..2 * dim {
                if e[v] > 0 {
                    let mut d = e.clone();
                    d[v] -= 1;
                    push(&mut plan, v, t.coef * f64::from(e[v]), &d);
                }
            }
        }
        plan
    }

    fn usable(&self, dim: usize) -> bool {
        2 * dim <= 12 && self.max_exp < 8 && self.factors.iter().all(|&(_, p)| p < 8)
    }
}

type Key = (Vec<u32>, Vec<u32>);

impl Polynomial {
    fn from_map(dim: usize, map: BTreeMap<Key, f64>) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((xp, kp), coef)| Term { coef, xp, kp })
            .collect::<Vec<_>>();
        Self::build(dim, terms)
    }

    fn build(dim: usize, terms: Vec<Term>) -> Self {
        let plan = GradientPlan::new(dim, &terms);
        Self { dim, terms, plan }
    }

    fn to_map(&self) -> BTreeMap<Key, f64> {
        let mut map = BTreeMap::new();
        for t in &self.terms {
            *map.entry((t.xp.clone(), t.kp.clone())).or_insert(0.0) += t.coef;
        }
        map
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = Term>) -> Self {
        let mut map: BTreeMap<Key, f64> = BTreeMap::new();
        for t in terms {
            assert_eq!(t.xp.len(), dim);
            assert_eq!(t.kp.len(), dim);
            *map.entry((t.xp, t.kp)).or_insert(0.0) += t.coef;
        }
        Self::from_map(dim, map)
    }

    pub fn zero(dim: usize) -> Self {
        Self::build(dim, Vec::new())
    }

    pub fn constant(dim: usize, v: f64) -> Self {
        Self::from_terms(
            dim,
            [Term {
                coef: v,
                xp: vec![0; dim],
                kp: vec![0; dim],
            }],
        )
    }

    pub fn x_var(dim: usize, i: usize) -> Self {
        let mut xp = vec![0; dim];
        xp[i] = 1;
        Self::from_terms(
            dim,
            [Term {
                coef: 1.0,
                xp,
                kp: vec![0; dim],
            }],
        )
    }

    pub fn k_var(dim: usize, i: usize) -> Self {
        let mut kp = vec![0; dim];
        kp[i] = 1;
        Self::from_terms(
            dim,
            [Term {
                coef: 1.0,
                xp: vec![0; dim],
                kp,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [t] if t.xp.iter().chain(&t.kp).all(|&e| e == 0) => Some(t.coef),
            _ => None,
        }
    }

    pub fn scale(&self, f: f64) -> Self {
        let map = self
            .terms
            .iter()
            .map(|t| ((t.xp.clone(), t.kp.clone()), t.coef * f))
            .collect();
        Self::from_map(self.dim, map)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn k_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.kp.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn depends_on_x(&self, i: usize) -> bool {
        self.terms.iter().any(|t| t.xp[i] > 0)
    }

    pub fn eval(&self, x: &[f64], k: &[f64]) -> f64 {
        let n = self.dim;
        if self.plan.usable(n) {
            let var = |v: usize| if v < n { x[v] } else { k[v - n] };
            return self
                .plan
                .monos
                .iter()
                .filter(|m| m.0 == usize::MAX)
                .map(|&(_, coef, a, b)| {
                    self.plan.factors[a as usize..b as usize]
                        .iter()
                        .fold(coef, |m, &(v, p)| m * var(v as usize).powi(i32::from(p)))
                })
                .sum();
        }
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coef;
                for i in 0..self.dim {
                    v *= x[i].powi(t.xp[i] as i32) * k[i].powi(t.kp[i] as i32);
                }
                v
            })
            .sum()
    }

    /// Evaluate at real `x` and complex `k`.
    pub fn eval_complex_k(&self, x: &[f64], k: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let mut v = Complex64::new(t.coef, 0.0);
                for i in 0..self.dim {
                    v *= x[i].powi(t.xp[i] as i32) * k[i].powi(t.kp[i] as i32);
                }
                v
            })
            .sum()
    }

    /// Value and first derivatives written into `gx = ∂/∂x`, `gk = ∂/∂k`.
    pub fn value_and_gradient(&self, x: &[f64], k: &[f64], gx: &mut [f64], gk: &mut [f64]) -> f64 {
        let n = self.dim;
        if self.plan.usable(n) {
            let mut pow = [[1.0f64; 8]; 12];
            for v in 0..2 * n {
                let b = if v < n { x[v] } else { k[v - n] };
                for e in 1..=self.plan.max_exp {
                    pow[v][e] = pow[v][e - 1] * b;
                }
            }
            let mut slots = [0.0f64; 12];
            let mut value = 0.0;
            for &(slot, coef, a, b) in &self.plan.monos {
                let mut m = coef;
                for &(v, p) in &self.plan.factors[a as usize..b as usize] {
                    m *= pow[v as usize][p as usize];
                }
                if slot == usize::MAX {
                    value += m;
                } else {
                    slots[slot] += m;
                }
            }
            gx[..n].copy_from_slice(&slots[..n]);
            gk[..n].copy_from_slice(&slots[n..2 * n]);
            return value;
        }
        gx[..n].iter_mut().for_each(|g| *g = 0.0);
        gk[..n].iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        // factors[v] = var^e, dfactors[v] = e var^(e-1); x vars then k vars
        let mut factors = [0.0f64; 12];
        let mut dfactors = [0.0f64; 12];
        for t in &self.terms {
            for i in 0..n {
                let (e, v) = (t.xp[i] as i32, x[i]);
                factors[i] = v.powi(e);
                dfactors[i] = if e == 0 { 0.0 } else { f64::from(e) * v.powi(e - 1) };
                let (e, v) = (t.kp[i] as i32, k[i]);
                factors[n + i] = v.powi(e);
                dfactors[n + i] = if e == 0 { 0.0 } else { f64::from(e) * v.powi(e - 1) };
            }
            let mut full = t.coef;
            for f in &factors[..2 * n] {
                full *= f;
            }
            value += full;
            for var in 0..2 * n {
                if dfactors[var] == 0.0 {
                    continue;
                }
                let mut d = t.coef * dfactors[var];
                for (w, f) in factors[..2 * n].iter().enumerate() {
                    if w != var {
                        d *= f;
                    }
                }
                if var < n {
                    gx[var] += d;
                } else {
                    gk[var - n] += d;
                }
            }
        }
        value
    }

    /// `∂_x^a ∂_k^b` of the polynomial.
    pub fn partial(&self, a: &MultiIndex, b: &MultiIndex) -> Self {
        let mut map: BTreeMap<Key, f64> = BTreeMap::new();
        'terms: for t in &self.terms {
            let mut coef = t.coef;
            let mut xp = t.xp.clone();
            let mut kp = t.kp.clone();
            for i in 0..self.dim {
                let (da, db) = (a.components()[i], b.components()[i]);
                if da > xp[i] || db > kp[i] {
                    continue 'terms;
                }
                coef *= falling(xp[i], da) * falling(kp[i], db);
                xp[i] -= da;
                kp[i] -= db;
            }
            *map.entry((xp, kp)).or_insert(0.0) += coef;
        }
        Self::from_map(self.dim, map)
    }

    /// Substitute `k → k + shift`.
    pub fn shift_k(&self, shift: &[f64]) -> Self {
        let mut out = Self::zero(self.dim);
        for t in &self.terms {
            let mut acc = Self::from_terms(
                self.dim,
                [Term {
                    coef: t.coef,
                    xp: t.xp.clone(),
                    kp: vec![0; self.dim],
                }],
            );
            for i in 0..self.dim {
                let e = t.kp[i];
                if e == 0 {
                    continue;
                }
                let mut factor = Self::zero(self.dim);
                for j in 0..=e {
                    let mut kp = vec![0; self.dim];
                    kp[i] = j;
                    let coef = binomial(e, j) * shift[i].powi((e - j) as i32);
                    factor = &factor
                        + &Self::from_terms(
                            self.dim,
                            [Term {
                                coef,
                                xp: vec![0; self.dim],
                                kp,
                            }],
                        );
                }
                acc = &acc * &factor;
            }
            out = &out + &acc;
        }
        out
    }
}

fn falling(n: u32, d: u32) -> f64 {
    (0..d).map(|i| f64::from(n - i)).product()
}

impl<'a> Add for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        let mut map = self.to_map();
        for t in &rhs.terms {
            *map.entry((t.xp.clone(), t.kp.clone())).or_insert(0.0) += t.coef;
        }
        Polynomial::from_map(self.dim, map)
    }
}

impl<'a> Sub for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl<'a> Mul for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        let mut map: BTreeMap<Key, f64> = BTreeMap::new();
        for a in &self.terms {
            for b in &rhs.terms {
                let xp = a.xp.iter().zip(&b.xp).map(|(p, q)| p + q).collect();
                let kp = a.kp.iter().zip(&b.kp).map(|(p, q)| p + q).collect();
                *map.entry((xp, kp)).or_insert(0.0) += a.coef * b.coef;
            }
        }
        Polynomial::from_map(self.dim, map)
    }
}
