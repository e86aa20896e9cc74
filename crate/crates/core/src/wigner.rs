//! Discrete Wigner transform, phase-space marginals, and pseudo-spectral
//! Weyl operators.
//!
//! Fields live on uniform grids and are treated as periodic by the spectral
//! routines, so they must decay inside the domain (or be exactly periodic).
//! The transform reads half-integer samples `ψ(x ± s/2)` from a band-limited
//! ×2 upsampling, which makes the discrete marginal identity exact up to
//! roundoff.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayD, Axis as NdAxis, IxDyn};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::moments::MomentTable;
use crate::multi_index::{binomial, enumerate_multi_indices};
use crate::symbols::{DispersionSymbol, Polynomial, SymbolError};

/// Fraction of the domain (per side) that must be empty.
pub const DECAY_MARGIN: f64 = 0.1;
/// Allowed amplitude inside the margin, relative to the maximum.
pub const DECAY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum WignerError {
    #[error("aliasing: {what} reaches {ratio:.3e} of the peak along axis {axis}")]
    Aliasing {
        what: &'static str,
        axis: usize,
        ratio: f64,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("imaginary residue {0:.3e} in the Wigner transform")]
    NotReal(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// A uniform axis `origin + i·step`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub origin: f64,
    pub step: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(origin: f64, step: f64, n: usize) -> Self {
        Self { origin, step, n }
    }

    /// `n` cells covering `[lo, hi)`.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Self {
        Self::new(lo, (hi - lo) / n as f64, n)
    }

    /// `n` points centred on zero with spacing `step`; index `n/2` is zero.
    pub fn centered(step: f64, n: usize) -> Self {
        Self::new(-((n / 2) as f64) * step, step, n)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Fractional index of `v`.
    pub fn position(&self, v: f64) -> f64 {
        (v - self.origin) / self.step
    }

    pub fn nearest(&self, v: f64) -> Option<usize> {
        let p = self.position(v).round();
        (p >= 0.0 && p < self.n as f64).then_some(p as usize)
    }

    /// Angular wavenumbers `2πm/(n·step)`, `m ∈ [−n/2, n/2)`, in FFT order.
    pub fn fft_wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|q| {
                let m = if q < n - n / 2 { q } else { q - n };
                let m = if n % 2 == 0 && q == n / 2 { -n / 2 } else { m };
                2.0 * PI * m as f64 / (n as f64 * self.step)
            })
            .collect()
    }

    fn validate(&self, what: &str) -> Result<(), WignerError> {
        if self.n == 0 || !(self.step > 0.0) || !self.origin.is_finite() || !self.step.is_finite() {
            return Err(WignerError::Input(format!("bad {what} axis {self:?}")));
        }
        Ok(())
    }
}

/// A complex field on a uniform 1D or 2D grid. With a carrier `c`, the
/// physical field is `values · e^{i c·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    axes: Vec<Axis>,
    values: ArrayD<Complex64>,
    carrier: Option<Vec<f64>>,
    labels: Vec<String>,
}

impl SampledField {
    pub fn new_1d(axis: Axis, values: Vec<Complex64>) -> Result<Self, WignerError> {
        axis.validate("field")?;
        if values.len() != axis.n {
            return Err(WignerError::Input(format!(
                "{} samples for an axis of {}",
                values.len(),
                axis.n
            )));
        }
        Ok(Self {
            axes: vec![axis],
            values: ArrayD::from_shape_vec(IxDyn(&[axis.n]), values).expect("length checked"),
            carrier: None,
            labels: vec!["x".into()],
        })
    }

    pub fn new_2d(a0: Axis, a1: Axis, values: Array2<Complex64>) -> Result<Self, WignerError> {
        a0.validate("first")?;
        a1.validate("second")?;
        if values.dim() != (a0.n, a1.n) {
            return Err(WignerError::Input(format!(
                "shape {:?} does not match axes ({}, {})",
                values.dim(),
                a0.n,
                a1.n
            )));
        }
        Ok(Self {
            axes: vec![a0, a1],
            values: values.into_dyn(),
            carrier: None,
            labels: vec!["x".into(), "z".into()],
        })
    }

    pub fn from_fn_1d(axis: Axis, f: impl Fn(f64) -> Complex64) -> Result<Self, WignerError> {
        Self::new_1d(axis, axis.coords().into_iter().map(f).collect())
    }

    /// Build from explicit sample positions, which must be uniformly spaced.
    pub fn from_samples(xs: &[f64], values: Vec<Complex64>) -> Result<Self, WignerError> {
        if xs.len() < 2 {
            return Err(WignerError::Input("need at least two samples".into()));
        }
        let step = xs[1] - xs[0];
        for (i, w) in xs.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs() {
                return Err(WignerError::Input(format!("non-uniform spacing at sample {}", i + 1)));
            }
        }
        Self::new_1d(Axis::new(xs[0], step, xs.len()), values)
    }

    pub fn with_carrier(mut self, carrier: Vec<f64>) -> Self {
        assert_eq!(carrier.len(), self.axes.len());
        self.carrier = Some(carrier);
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.axes.len());
        self.labels = labels;
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn carrier(&self) -> Option<&[f64]> {
        self.carrier.as_deref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Samples of a 1D field.
    pub fn samples(&self) -> &[Complex64] {
        self.values.as_slice().expect("fields are stored contiguously")
    }

    pub fn intensity(&self) -> ArrayD<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }

    /// `∫|ψ|²` by the rectangle rule.
    pub fn norm_sq(&self) -> f64 {
        let cell: f64 = self.axes.iter().map(|a| a.step).product();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell
    }

    fn same_grid(&self, values: ArrayD<Complex64>) -> Self {
        Self {
            axes: self.axes.clone(),
            values,
            carrier: self.carrier.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Checks that `|ψ|` is below `1e-8·max` in the outer 10% along every
    /// axis.
    pub fn check_decay(&self) -> Result<(), WignerError> {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        for (d, axis) in self.axes.iter().enumerate() {
            let margin = ((axis.n as f64 * DECAY_MARGIN).ceil() as usize).max(1);
            let mut worst = 0.0f64;
            for (i, lane) in self.values.axis_iter(NdAxis(d)).enumerate() {
                if i < margin || i >= axis.n.saturating_sub(margin) {
                    worst = lane.iter().map(|v| v.norm()).fold(worst, f64::max);
                }
            }
            let ratio = worst / peak;
            if ratio >= DECAY_THRESHOLD {
                return Err(WignerError::Aliasing {
                    what: "field amplitude in the decay margin",
                    axis: d,
                    ratio,
                });
            }
        }
        Ok(())
    }
}

/// A real density on an `(x, k)` grid; `values[[i, m]] = W(x_i, k_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    x: Axis,
    k: Axis,
    values: Array2<f64>,
}

impl WignerGrid {
    pub fn new(x: Axis, k: Axis, values: Array2<f64>) -> Result<Self, WignerError> {
        x.validate("x")?;
        k.validate("k")?;
        if values.dim() != (x.n, k.n) {
            return Err(WignerError::Input(format!(
                "shape {:?} does not match axes ({}, {})",
                values.dim(),
                x.n,
                k.n
            )));
        }
        if let Some(((i, m), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(WignerError::Input(format!("non-finite value at ({i}, {m})")));
        }
        Ok(Self { x, k, values })
    }

    pub fn from_fn(x: Axis, k: Axis, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((x.n, k.n), |(i, m)| f(x.coord(i), k.coord(m)));
        Self { x, k, values }
    }

    pub fn x_axis(&self) -> Axis {
        self.x
    }

    pub fn k_axis(&self) -> Axis {
        self.k
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Grid index of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for (idx, &v) in self.values.indexed_iter() {
            if v > best.1 {
                best = (idx, v);
            }
        }
        best.0
    }

    /// Cubic resampling onto new axes; points outside the source are zero.
    pub fn resample(&self, x: Axis, k: Axis) -> WignerGrid {
        let values = Array2::from_shape_fn((x.n, k.n), |(i, m)| {
            let fx = self.x.position(x.coord(i));
            let fk = self.k.position(k.coord(m));
            crate::interp::cubic2(&self.values, fx, fk).unwrap_or(0.0)
        });
        WignerGrid { x, k, values }
    }
}

struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Spectral {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }
}

/// Band-limited ×2 upsampling of a decaying 1D sequence: sample `2j` of the
/// result is sample `j` of the input.
fn upsample2(planner: &mut FftPlanner<f64>, psi: &[Complex64]) -> Vec<Complex64> {
    let n = psi.len();
    let mut spec = psi.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut fine = vec![Complex64::new(0.0, 0.0); 2 * n];
    let pos = n - n / 2;
    fine[..pos].copy_from_slice(&spec[..pos]);
    fine[n + pos..].copy_from_slice(&spec[pos..]);
    if n.is_multiple_of(2) {
        // split the Nyquist bin between ±n/2
        let nyq = spec[n / 2];
        fine[n / 2] = nyq * 0.5;
        fine[n + n / 2] = nyq * 0.5;
    }
    planner.plan_fft_inverse(2 * n).process(&mut fine);
    let scale = 1.0 / n as f64;
    fine.iter_mut().for_each(|v| *v *= scale);
    fine
}

/// `W(x_j, k_m) = Σ_s ψ(x_j + s/2) ψ*(x_j − s/2) e^{−i k_m s} dx` with
/// `k_m = 2πm/(Ns·dx)`, `m ∈ [−Ns/2, Ns/2)`, `Ns = padding·N`. A carrier
/// shifts the k-axis.
pub fn wigner_transform(field: &SampledField, padding: usize) -> Result<WignerGrid, WignerError> {
    if field.dim() != 1 {
        return Err(WignerError::Unsupported(
            "Wigner transforms are limited to 1D fields".into(),
        ));
    }
    if padding == 0 {
        return Err(WignerError::Input("padding factor must be at least 1".into()));
    }
    field.check_decay()?;
    let axis = field.axes()[0];
    let n = axis.n;
    let ns = padding * n;
    let half = (ns / 2) as i64;
    let dx = axis.step;

    let mut planner = FftPlanner::new();
    let fine = upsample2(&mut planner, field.samples());
    let fft = planner.plan_fft_forward(ns);
    let fine_at = |i: i64| -> Complex64 {
        if (0..2 * n as i64).contains(&i) {
            fine[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };

    let mut values = Array2::zeros((n, ns));
    let mut buf = vec![Complex64::new(0.0, 0.0); ns];
    let mut residue = 0.0f64;
    let mut peak = 0.0f64;
    for j in 0..n {
        let c = 2 * j as i64;
        for s in -half..(ns as i64 - half) {
            let slot = s.rem_euclid(ns as i64) as usize;
            let r = fine_at(c + s) * fine_at(c - s).conj();
            // the unpaired separation −Ns/2 enters with its Hermitian average
            buf[slot] = if s == -half && ns.is_multiple_of(2) {
                Complex64::new(r.re, 0.0)
            } else {
                r
            };
        }
        fft.process(&mut buf);
        for m in 0..ns {
            let v = buf[(m as i64 - half).rem_euclid(ns as i64) as usize] * dx;
            residue = residue.max(v.im.abs());
            peak = peak.max(v.re.abs());
            values[[j, m]] = v.re;
        }
    }
    if residue > 1e-10 * peak.max(f64::MIN_POSITIVE) {
        return Err(WignerError::NotReal(residue / peak));
    }
    let dk = 2.0 * PI / (ns as f64 * dx);
    let shift = field.carrier().map_or(0.0, |c| c[0]);
    let k = Axis::new(-(half as f64) * dk + shift, dk, ns);
    WignerGrid::new(axis, k, values)
}

/// `(2π)^{-1} Σ_m W(x_j, k_m) dk`.
pub fn marginal_intensity(w: &WignerGrid) -> Vec<f64> {
    let scale = w.k.step / (2.0 * PI);
    w.values.rows().into_iter().map(|row| row.sum() * scale).collect()
}

/// `(2π)^{-1} Σ_m A(x_j, k_m) W(x_j, k_m) dk` for a one-dimensional symbol.
pub fn expectation(w: &WignerGrid, a: &DispersionSymbol) -> Result<Vec<f64>, WignerError> {
    if a.dim() != 1 {
        return Err(WignerError::Input(format!(
            "expectation needs a 1D symbol, `{}` is {}D",
            a.name,
            a.dim()
        )));
    }
    let scale = w.k.step / (2.0 * PI);
    let mut out = Vec::with_capacity(w.x.n);
    for (j, row) in w.values.rows().into_iter().enumerate() {
        let x = [w.x.coord(j)];
        let mut acc = 0.0;
        for (m, &v) in row.iter().enumerate() {
            acc += a.eval(&x, &[w.k.coord(m)])?.0 * v;
        }
        out.push(acc * scale);
    }
    Ok(out)
}

/// Central moments of `W` about `center[j]` at each `x_j`, normalized by the
/// local marginal. Positions whose marginal is below `1e-10` of the largest
/// one have no defined moments and yield `None`.
pub fn moments_of_wigner(
    w: &WignerGrid,
    center: &[f64],
    max_order: u32,
) -> Result<Vec<Option<MomentTable>>, WignerError> {
    if center.len() != w.x.n {
        return Err(WignerError::Input(format!(
            "{} centres for {} positions",
            center.len(),
            w.x.n
        )));
    }
    let masses: Vec<f64> = w.values.rows().into_iter().map(|r| r.sum()).collect();
    let largest = masses.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let indices = enumerate_multi_indices(1, max_order);
    Ok(w.values
        .rows()
        .into_iter()
        .zip(&masses)
        .zip(center)
        .map(|((row, &mass), &kc)| {
            if mass.abs() <= 1e-10 * largest || largest == 0.0 {
                return None;
            }
            let mut table = MomentTable::new(1, max_order);
            for alpha in &indices {
                let p = alpha.components()[0] as i32;
                let sum: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(m, &v)| (w.k.coord(m) - kc).powi(p) * v)
                    .sum();
                table.set(alpha.clone(), sum / mass);
            }
            table.set_normalized(true);
            Some(table)
        })
        .collect())
}

/// Window `½[tanh((i − a)/σ) − tanh((i − b)/σ)]` with ramps centred
/// `edge` samples inside each end and width `σ = width` samples. Its
/// spectrum decays exponentially, so windowed smooth data stay band-limited.
pub fn tanh_window(n: usize, edge: f64, width: f64) -> Vec<f64> {
    let (a, b) = (edge, n as f64 - 1.0 - edge);
    (0..n)
        .map(|i| {
            let t = i as f64;
            0.5 * (((t - a) / width).tanh() - ((t - b) / width).tanh())
        })
        .collect()
}

/// Largest spectral magnitude in the top 10% of the band along each axis,
/// relative to the overall spectral peak.
fn check_band(field: &SampledField, planner: &mut FftPlanner<f64>) -> Result<(), WignerError> {
    for (d, axis) in field.axes.iter().enumerate() {
        let n = axis.n;
        if n < 8 {
            continue;
        }
        let fft = planner.plan_fft_forward(n);
        let mut per_bin = vec![0.0f64; n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for lane in field.values.lanes(NdAxis(d)) {
            buf.iter_mut().zip(lane.iter()).for_each(|(b, v)| *b = *v);
            fft.process(&mut buf);
            for (p, b) in per_bin.iter_mut().zip(&buf) {
                *p = p.max(b.norm());
            }
        }
        let peak = per_bin.iter().fold(0.0f64, |a, &b| a.max(b));
        if peak == 0.0 {
            continue;
        }
        let cutoff = 0.9 * (n / 2) as f64;
        let top = per_bin
            .iter()
            .enumerate()
            .filter(|(q, _)| {
                let m = if *q <= n / 2 { *q as f64 } else { n as f64 - *q as f64 };
                m > cutoff
            })
            .fold(0.0f64, |a, (_, &b)| a.max(b));
        let ratio = top / peak;
        if ratio >= DECAY_THRESHOLD {
            return Err(WignerError::Aliasing {
                what: "spectral content near Nyquist",
                axis: d,
                ratio,
            });
        }
    }
    Ok(())
}

/// Applies `k̂^b` along axis `d`, with `k̂ = −i∂` realized spectrally.
fn apply_k_power(
    values: &ArrayD<Complex64>,
    d: usize,
    b: u32,
    spectral: &Spectral,
    wavenumbers: &[f64],
) -> ArrayD<Complex64> {
    let mut out = values.clone();
    if b == 0 {
        return out;
    }
    let n = spectral.n;
    let factors: Vec<f64> = wavenumbers.iter().map(|k| k.powi(b as i32) / n as f64).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for mut lane in out.lanes_mut(NdAxis(d)) {
        buf.iter_mut().zip(lane.iter()).for_each(|(b, v)| *b = *v);
        spectral.forward.process(&mut buf);
        buf.iter_mut().zip(&factors).for_each(|(b, f)| *b *= f);
        spectral.inverse.process(&mut buf);
        lane.iter_mut().zip(&buf).for_each(|(v, b)| *v = *b);
    }
    out
}

fn multiply_x_power(values: &mut ArrayD<Complex64>, d: usize, p: u32, axis: &Axis) {
    if p == 0 {
        return;
    }
    for (i, mut slab) in values.axis_iter_mut(NdAxis(d)).enumerate() {
        let f = axis.coord(i).powi(p as i32);
        slab.mapv_inplace(|v| v * f);
    }
}

/// Applies the Weyl-quantized operator `D̂′` to `field`.
///
/// Symbols polynomial in `(x, k)` use spectral derivatives with
/// `Weyl(x^a k^b) = 2^{−a} Σ_j C(a,j) x^j k̂^b x^{a−j}` per dimension. Other
/// one-dimensional symbols fall back to the midpoint double sum of
/// [`weyl_apply_tabulated`]. A carrier `c` is handled by applying
/// `D′(x, k + c)` to the stored envelope.
pub fn weyl_apply(d: &DispersionSymbol, field: &SampledField) -> Result<SampledField, WignerError> {
    if d.dim() != field.dim() {
        return Err(WignerError::Input(format!(
            "{}D symbol applied to a {}D field",
            d.dim(),
            field.dim()
        )));
    }
    let Some(poly) = d.real.as_polynomial() else {
        if field.dim() == 1 {
            return weyl_apply_tabulated(d, field);
        }
        return Err(WignerError::Unsupported(format!(
            "symbol `{}` is not polynomial; tabulated application is 1D only",
            d.name
        )));
    };
    let mut planner = FftPlanner::new();
    check_band(field, &mut planner)?;
    let poly = match field.carrier() {
        Some(c) => poly.shift_k(c),
        None => poly.clone(),
    };
    Ok(field.same_grid(apply_polynomial(&poly, field, &mut planner)))
}

fn apply_polynomial(poly: &Polynomial, field: &SampledField, planner: &mut FftPlanner<f64>) -> ArrayD<Complex64> {
    let spectral: Vec<Spectral> = field.axes.iter().map(|a| Spectral::new(planner, a.n)).collect();
    let wavenumbers: Vec<Vec<f64>> = field.axes.iter().map(|a| a.fft_wavenumbers()).collect();
    let mut out = ArrayD::zeros(field.values.raw_dim());
    for term in poly.terms() {
        let mut acc = field.values.clone();
        for d in 0..field.dim() {
            let (a, b) = (term.xp[d], term.kp[d]);
            if a == 0 {
                acc = apply_k_power(&acc, d, b, &spectral[d], &wavenumbers[d]);
                continue;
            }
            let mut sum = ArrayD::zeros(acc.raw_dim());
            for j in 0..=a {
                let mut inner = acc.clone();
                multiply_x_power(&mut inner, d, a - j, &field.axes[d]);
                let mut v = apply_k_power(&inner, d, b, &spectral[d], &wavenumbers[d]);
                multiply_x_power(&mut v, d, j, &field.axes[d]);
                sum = sum + v * Complex64::new(binomial(a, j), 0.0);
            }
            acc = sum * Complex64::new(0.5f64.powi(a as i32), 0.0);
        }
        out = out + acc * Complex64::new(term.coef, 0.0);
    }
    out
}

/// Midpoint-rule double sum
/// `(D̂ψ)_j = N^{-1} Σ_l Σ_m D′((x_j + x_l)/2, k_m) e^{i k_m (x_j − x_l)} ψ_l`
/// on a periodic 1D grid.
pub fn weyl_apply_tabulated(d: &DispersionSymbol, field: &SampledField) -> Result<SampledField, WignerError> {
    if field.dim() != 1 || d.dim() != 1 {
        return Err(WignerError::Unsupported("tabulated Weyl application is 1D only".into()));
    }
    let mut planner = FftPlanner::new();
    check_band(field, &mut planner)?;
    let axis = field.axes[0];
    let n = axis.n;
    let shift = field.carrier().map_or(0.0, |c| c[0]);
    let ks = axis.fft_wavenumbers();
    let inverse = planner.plan_fft_inverse(n);
    // kernel[s][r] = Σ_m D′(x_0 + s·dx/2, k_m) e^{2πi m r / N}, s = j + l
    let mut kernel = Vec::with_capacity(2 * n - 1);
    for s in 0..2 * n - 1 {
        let xm = [axis.origin + s as f64 * axis.step / 2.0];
        let mut row = Vec::with_capacity(n);
        for &k in &ks {
            let v = d.eval(&xm, &[k + shift])?.0;
            row.push(Complex64::new(v, 0.0));
        }
        inverse.process(&mut row);
        kernel.push(row);
    }
    let psi = field.samples();
    let out: Vec<Complex64> = (0..n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, p) in psi.iter().enumerate() {
                let r = (j as i64 - l as i64).rem_euclid(n as i64) as usize;
                acc += kernel[j + l][r] * p;
            }
            acc / n as f64
        })
        .collect();
    let values = ArrayD::from_shape_vec(IxDyn(&[n]), out).expect("length matches");
    Ok(field.same_grid(values))
}
