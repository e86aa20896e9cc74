//! Closed-form solutions for a Gaussian launched into a lens-like medium,
//! and an independent split-step solver of the paraxial equation
//! `i ∂ψ/∂z = −(1/2k0) ∂²ψ/∂x² + (k0 x²/2L²) ψ`.
//!
//! Phase-space flow of the paraxial problem is a rotation with period
//! `2πL`; `L = ∞` is free propagation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::cgo::GaussianBeamState;
use crate::symbols::{MediumParameters, SymbolError};
use crate::wigner::{Axis, SampledField, WignerError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error("norm drifted by {drift:.3e} in one step at z={z}")]
    NormDrift { z: f64, drift: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensLikeScenario {
    pub medium: MediumParameters,
    pub w0: f64,
    pub x0: f64,
    pub u0: f64,
}

impl LensLikeScenario {
    pub fn new(medium: MediumParameters, w0: f64, x0: f64, u0: f64) -> Result<Self, OracleError> {
        if !(w0 > 0.0 && w0.is_finite()) || !x0.is_finite() || !u0.is_finite() {
            return Err(OracleError::Input(format!("bad launch w0={w0}, x0={x0}, u0={u0}")));
        }
        Ok(Self { medium, w0, x0, u0 })
    }

    /// Launch with unit power, `u0² = √(2/π)/w0`.
    pub fn normalized(medium: MediumParameters, w0: f64, x0: f64) -> Result<Self, OracleError> {
        Self::new(medium, w0, x0, ((2.0 / PI).sqrt() / w0).sqrt())
    }

    /// Medium length chosen so that `L/zR = ratio`.
    pub fn from_ratio(k0: f64, w0: f64, ratio: f64, x0: f64, u0: f64) -> Result<Self, OracleError> {
        let length = ratio * k0 * w0 * w0 / 2.0;
        Self::new(MediumParameters::new(k0, length, 1.0)?, w0, x0, u0)
    }

    pub fn rayleigh_range(&self) -> f64 {
        self.medium.rayleigh_range(self.w0)
    }

    pub fn ratio(&self) -> f64 {
        self.medium.length / self.rayleigh_range()
    }

    /// Beam state at the launch plane.
    pub fn launch_state(&self) -> GaussianBeamState {
        GaussianBeamState::launch(self.w0, self.x0, 0.0, self.u0)
    }

    /// `u0 e^{−(x−x0)²/w0²}` on `axis`.
    pub fn launch_field(&self, axis: Axis) -> Result<SampledField, OracleError> {
        Ok(SampledField::from_fn_1d(axis, |x| {
            let t = (x - self.x0) / self.w0;
            Complex64::new(self.u0 * (-t * t).exp(), 0.0)
        })?)
    }

    pub fn analytic_width(&self, z: f64) -> f64 {
        let zr = self.rayleigh_range();
        let l = self.medium.length;
        if l.is_infinite() {
            return self.w0 * (1.0 + (z / zr).powi(2)).sqrt();
        }
        let (s, c) = (z / l).sin_cos();
        self.w0 * (c * c + (l / zr).powi(2) * s * s).sqrt()
    }

    /// Beam centre `x0 cos(z/L)`.
    pub fn analytic_center(&self, z: f64) -> f64 {
        if self.medium.length.is_infinite() {
            self.x0
        } else {
            self.x0 * (z / self.medium.length).cos()
        }
    }

    pub fn analytic_intensity(&self, x: f64, z: f64) -> f64 {
        let w = self.analytic_width(z);
        let t = (x - self.analytic_center(z)) / w;
        self.u0 * self.u0 * self.w0 / w * (-2.0 * t * t).exp()
    }

    /// Launch-plane point reached by the backward flow from `(x, k)` at `z`.
    pub fn foot(&self, x: f64, k: f64, z: f64) -> (f64, f64) {
        let (k0, l) = (self.medium.k0, self.medium.length);
        if l.is_infinite() {
            return (x - k * z / k0, k);
        }
        let (s, c) = (z / l).sin_cos();
        (x * c - k * l / k0 * s, k * c + k0 * x / l * s)
    }

    /// Exact Wigner function: the launch Wigner function
    /// `u0² w0 √(2π) e^{−2(x−x0)²/w0²} e^{−k²w0²/2}` carried by the flow.
    pub fn oscillator_wigner(&self, x: f64, k: f64, z: f64) -> f64 {
        let (xf, kf) = self.foot(x, k, z);
        let t = (xf - self.x0) / self.w0;
        let q = kf * self.w0;
        self.u0 * self.u0 * self.w0 * (2.0 * PI).sqrt() * (-2.0 * t * t - 0.5 * q * q).exp()
    }
}

/// Centre and `2·√variance` width of `|ψ|²`.
pub fn second_moment_width(field: &SampledField) -> Result<(f64, f64), OracleError> {
    if field.dim() != 1 {
        return Err(OracleError::Input("width needs a 1D field".into()));
    }
    let axis = field.axes()[0];
    let p: Vec<f64> = field.samples().iter().map(|v| v.norm_sqr()).collect();
    let m0: f64 = p.iter().sum();
    if !(m0 > 0.0) {
        return Err(OracleError::Input("field is identically zero".into()));
    }
    let mean = p.iter().enumerate().map(|(i, v)| v * axis.coord(i)).sum::<f64>() / m0;
    let var = p
        .iter()
        .enumerate()
        .map(|(i, v)| v * (axis.coord(i) - mean).powi(2))
        .sum::<f64>()
        / m0;
    Ok((mean, 2.0 * var.sqrt()))
}

/// Strang splitting: half potential kick, exact spectral free step, half
/// kick. Returns the field at `z_target`; steps are `dz` or shorter.
pub fn split_step_reference(
    initial: &SampledField,
    medium: &MediumParameters,
    z_target: f64,
    dz: f64,
) -> Result<SampledField, OracleError> {
    Ok(split_step_stations(initial, medium, &[z_target], dz)?.remove(0))
}

/// Default split-step step per unit medium length.
pub const STEPS_PER_LENGTH: f64 = 400.0;

/// Split-step fields at `zs`, starting from `dz = L/400` (or `zR/400` in a
/// homogeneous medium) and halving until successive intensities agree to
/// `tol` in relative L2 at every station. Returns the finer result and its
/// step.
pub fn split_step_refined(
    initial: &SampledField,
    medium: &MediumParameters,
    zs: &[f64],
    tol: f64,
    max_halvings: u32,
) -> Result<(Vec<SampledField>, f64), OracleError> {
    let base = if medium.length.is_finite() {
        medium.length
    } else {
        let (_, w) = second_moment_width(initial)?;
        medium.rayleigh_range(w)
    };
    let mut dz = base / STEPS_PER_LENGTH;
    let mut coarse = split_step_stations(initial, medium, zs, dz)?;
    for _ in 0..max_halvings {
        dz /= 2.0;
        let fine = split_step_stations(initial, medium, zs, dz)?;
        let change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| {
                let (mut num, mut den) = (0.0, 0.0);
                for (p, q) in a.samples().iter().zip(b.samples()) {
                    num += (p.norm_sqr() - q.norm_sqr()).powi(2);
                    den += q.norm_sqr().powi(2);
                }
                (num / den.max(f64::MIN_POSITIVE)).sqrt()
            })
            .fold(0.0, f64::max);
        coarse = fine;
        if change < tol {
            return Ok((coarse, dz));
        }
    }
    Err(OracleError::Input(format!(
        "split-step did not converge to {tol:e} after {max_halvings} halvings"
    )))
}

/// Split-step fields at increasing stations `zs`, starting from `z = 0`.
pub fn split_step_stations(
    initial: &SampledField,
    medium: &MediumParameters,
    zs: &[f64],
    dz: f64,
) -> Result<Vec<SampledField>, OracleError> {
    if initial.dim() != 1 || initial.carrier().is_some() {
        return Err(OracleError::Input("split-step needs a 1D field without carrier".into()));
    }
    if !(dz > 0.0) || zs.iter().any(|z| !(z.is_finite() && *z >= 0.0)) || zs.windows(2).any(|p| p[1] < p[0]) {
        return Err(OracleError::Input(format!("bad step {dz} or stations {zs:?}")));
    }
    let axis = initial.axes()[0];
    let n = axis.n;
    let k0 = medium.k0;
    let inv_l2 = if medium.length.is_infinite() {
        0.0
    } else {
        1.0 / (medium.length * medium.length)
    };
    let kx = axis.fft_wavenumbers();
    let xs = axis.coords();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut psi: Vec<Complex64> = initial.samples().to_vec();
    let norm = |p: &[Complex64]| p.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut z = 0.0;
    let mut out = Vec::with_capacity(zs.len());
    for &target in zs {
        let span = target - z;
        let steps = (span / dz).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            let kick: Vec<Complex64> = xs
                .iter()
                .map(|x| Complex64::from_polar(1.0, -0.5 * h * k0 * x * x * inv_l2 / 2.0))
                .collect();
            let drift: Vec<Complex64> = kx
                .iter()
                .map(|k| Complex64::from_polar(1.0 / n as f64, -h * k * k / (2.0 * k0)))
                .collect();
            for _ in 0..steps {
                let before = norm(&psi);
                psi.iter_mut().zip(&kick).for_each(|(p, f)| *p *= f);
                fwd.process(&mut psi);
                psi.iter_mut().zip(&drift).for_each(|(p, f)| *p *= f);
                inv.process(&mut psi);
                psi.iter_mut().zip(&kick).for_each(|(p, f)| *p *= f);
                z += h;
                let change = (norm(&psi) - before).abs() / before.max(f64::MIN_POSITIVE);
                if change > 1e-10 {
                    return Err(OracleError::NormDrift { z, drift: change });
                }
            }
        }
        z = target;
        out.push(SampledField::new_1d(axis, psi.clone())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(ratio: f64, x0: f64) -> LensLikeScenario {
        LensLikeScenario::from_ratio(400.0, 0.1, ratio, x0, 1.0).unwrap()
    }

    #[test]
    fn width_examples() {
        let s = scenario(0.5, 0.0);
        let l = s.medium.length;
        assert_eq!(s.analytic_width(0.0), s.w0);
        assert!((s.analytic_width(PI * l / 2.0) - 0.5 * s.w0).abs() < 1e-15);
        let matched = scenario(1.0, 0.0);
        for z in [0.3, 1.1, 7.0] {
            assert!((matched.analytic_width(z * l) - matched.w0).abs() < 1e-15);
        }
        let focus = s.analytic_intensity(0.0, PI * l / 2.0);
        assert!((focus - 2.0).abs() < 1e-14);
    }

    #[test]
    fn wigner_peak_and_period() {
        let s = LensLikeScenario::normalized(MediumParameters::new(400.0, 2.0, 1.0).unwrap(), 0.1, 0.03).unwrap();
        assert!((s.oscillator_wigner(0.03, 0.0, 0.0) - 2.0).abs() < 1e-14);
        let l = s.medium.length;
        for (x, k) in [(0.01, 3.0), (-0.05, -7.0)] {
            let a = s.oscillator_wigner(x, k, 0.0);
            let b = s.oscillator_wigner(x, k, 2.0 * PI * l);
            assert!((a - b).abs() < 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn wigner_marginal_is_intensity() {
        for x0 in [0.0, 0.02] {
            let s = scenario(0.5, x0);
            let z = 0.37 * s.medium.length;
            let dk = 0.05;
            for x in [-0.07, 0.0, 0.015, 0.05] {
                let m: f64 = (-8000..=8000)
                    .map(|i| s.oscillator_wigner(x, i as f64 * dk, z))
                    .sum::<f64>()
                    * dk
                    / (2.0 * PI);
                let exact = s.analytic_intensity(x, z);
                assert!((m - exact).abs() < 1e-8 * s.u0 * s.u0, "{m} vs {exact}");
            }
        }
    }

    #[test]
    fn free_space_diffraction() {
        let m = MediumParameters::new(400.0, f64::INFINITY, 1.0).unwrap();
        let s = LensLikeScenario::new(m, 0.1, 0.0, 1.0).unwrap();
        let zr = s.rayleigh_range();
        let axis = Axis::centered(0.1 / 32.0, 1024);
        let f = s.launch_field(axis).unwrap();
        let out = split_step_reference(&f, &m, zr, zr / 50.0).unwrap();
        let (_, w) = second_moment_width(&out).unwrap();
        assert!((w / s.analytic_width(zr) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lenslike_widths_and_norm() {
        let s = scenario(0.5, 0.02);
        let l = s.medium.length;
        let axis = Axis::centered(s.w0 / 32.0, 1024);
        let f = s.launch_field(axis).unwrap();
        let zs: Vec<f64> = (1..=8).map(|n| n as f64 * PI * l / 8.0).collect();
        let out = split_step_stations(&f, &s.medium, &zs, l / 400.0).unwrap();
        for (z, field) in zs.iter().zip(&out) {
            let (c, w) = second_moment_width(field).unwrap();
            assert!((w / s.analytic_width(*z) - 1.0).abs() < 1e-6, "z={z}: {w}");
            assert!((c - s.analytic_center(*z)).abs() < 1e-6 * s.w0);
            assert!((field.norm_sq() / f.norm_sq() - 1.0).abs() < 1e-11);
        }
    }
}
