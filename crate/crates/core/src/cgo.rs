//! Complex geometrical optics for Gaussian beams in a lens-like medium.
//!
//! A beam is carried by its centre `(xc, θ)`, the complex curvature
//! `Q = 1/R + 2i/(k0 w²)`, the on-axis intensity `amp2` and the on-axis
//! phase. The real eikonal `S`, the imaginary eikonal `φ` (zero on the beam
//! axis) and the slow intensity `|u|²` are rebuilt on a grid from those
//! parameters; the Gouy phase is kept apart as `arg u`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::kinetic::{solve_dispersion_normal, Branch, KineticError};
use crate::symbols::{DispersionSymbol, Expr, Jet, JetSpace, MediumParameters, SymbolError};
use crate::wigner::{Axis, SampledField, WignerError};

/// Minimum number of grid cells per beam width.
pub const MIN_CELLS_PER_WIDTH: f64 = 8.0;

#[derive(Debug, Error)]
pub enum CgoError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error("grid step {dx:.3e} under-resolves beam width {w:.3e} (need {MIN_CELLS_PER_WIDTH} cells)")]
    Resolution { w: f64, dx: f64 },
    #[error("boundary solve did not converge at x={x}: residual {residual:.3e}")]
    NoConvergence { x: f64, residual: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Beam parameters at one `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeamState {
    pub z: f64,
    pub xc: f64,
    pub theta: f64,
    pub w: f64,
    pub r_inv: f64,
    /// On-axis `|u|²`.
    pub amp2: f64,
    /// On-axis real eikonal, without the Gouy phase.
    pub s_axis: f64,
    /// `arg u`, continuous in `z`.
    pub gouy: f64,
}

impl GaussianBeamState {
    /// Beam launched at `z = 0` with waist `w0` centred on `x0`, tilt `theta0`
    /// and peak amplitude `u0`.
    pub fn launch(w0: f64, x0: f64, theta0: f64, u0: f64) -> Self {
        Self {
            z: 0.0,
            xc: x0,
            theta: theta0,
            w: w0,
            r_inv: 0.0,
            amp2: u0 * u0,
            s_axis: 0.0,
            gouy: 0.0,
        }
    }

    pub fn q(&self, k0: f64) -> Complex64 {
        Complex64::new(self.r_inv, 2.0 / (k0 * self.w * self.w))
    }

    /// Intensity `amp2 · e^{−2(x−xc)²/w²}`.
    pub fn intensity(&self, x: f64) -> f64 {
        let t = (x - self.xc) / self.w;
        self.amp2 * (-2.0 * t * t).exp()
    }

    /// Real eikonal off axis.
    pub fn phase(&self, k0: f64, x: f64) -> f64 {
        let dx = x - self.xc;
        self.s_axis + k0 * self.theta * dx + 0.5 * k0 * self.r_inv * dx * dx
    }

    fn with_q(mut self, k0: f64, q: Complex64) -> Self {
        self.r_inv = q.re;
        self.w = (2.0 / (k0 * q.im)).sqrt();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagation {
    ClosedForm,
    /// RK4 on the beam ODEs with at most this step.
    Ode {
        max_step: f64,
    },
}

/// Propagates `s0` to `z`.
pub fn propagate_beam(
    medium: &MediumParameters,
    s0: &GaussianBeamState,
    z: f64,
    method: Propagation,
) -> Result<GaussianBeamState, CgoError> {
    if !z.is_finite() || !(s0.w > 0.0) || !(s0.amp2 >= 0.0) {
        return Err(CgoError::Input(format!("cannot propagate {s0:?} to z={z}")));
    }
    Ok(match method {
        Propagation::ClosedForm => closed_form(medium, s0, z),
        Propagation::Ode { max_step } => {
            if !(max_step > 0.0) {
                return Err(CgoError::Input(format!("ODE step must be positive, got {max_step}")));
            }
            integrate(medium, s0, z, max_step)
        }
    })
}

fn closed_form(medium: &MediumParameters, s0: &GaussianBeamState, z: f64) -> GaussianBeamState {
    let k0 = medium.k0;
    let l = medium.length;
    let dz = z - s0.z;
    let q0 = s0.q(k0);
    let mut s = *s0;
    s.z = z;
    if l.is_infinite() {
        let den = Complex64::new(1.0, 0.0) + q0 * dz;
        s = s.with_q(k0, q0 / den);
        s.xc = s0.xc + s0.theta * dz;
        s.s_axis = s0.s_axis + k0 * dz + 0.5 * k0 * s0.theta * s0.theta * dz;
        s.gouy = s0.gouy - 0.5 * den.im.atan2(den.re);
    } else {
        let u = dz / l;
        let (sn, cs) = u.sin_cos();
        let den = cs + q0 * (l * sn);
        s = s.with_q(k0, (q0 * cs - sn / l) / den);
        let (a, b) = (s0.xc, s0.theta * l);
        s.xc = a * cs + b * sn;
        s.theta = (-a * sn + b * cs) / l;
        let (s2, c2) = (2.0 * u).sin_cos();
        let zeta = k0 / (2.0 * l) * ((b * b - a * a) * s2 / 2.0 + a * b * (c2 - 1.0));
        s.s_axis = s0.s_axis + k0 * dz + zeta;
        s.gouy = s0.gouy - 0.5 * unwrapped_arg(q0, l, u);
    }
    s.amp2 = s0.amp2 * s0.w / s.w;
    s
}

/// `arg(cos u + L Q0 sin u)`, continuous from zero at `u = 0`.
fn unwrapped_arg(q0: Complex64, l: f64, u: f64) -> f64 {
    let turns = (u / PI).floor();
    let r = u - turns * PI;
    let (sn, cs) = r.sin_cos();
    let v = cs + q0 * (l * sn);
    let mut a = v.im.atan2(v.re);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    // Im v ≥ 0 on [0, π), so the branch is [0, π]
    if r == 0.0 {
        a = 0.0;
    }
    a + turns * PI
}

// y = [xc, θ, Re Q, Im Q, ln amp2, s_axis, gouy]
fn integrate(medium: &MediumParameters, s0: &GaussianBeamState, z: f64, max_step: f64) -> GaussianBeamState {
    let k0 = medium.k0;
    let inv_l2 = if medium.length.is_infinite() {
        0.0
    } else {
        1.0 / (medium.length * medium.length)
    };
    let rhs = |y: &[f64; 7]| -> [f64; 7] {
        let q = Complex64::new(y[2], y[3]);
        let dq = -q * q - inv_l2;
        [
            y[1],
            -y[0] * inv_l2,
            dq.re,
            dq.im,
            -y[2],
            k0 + 0.5 * k0 * y[1] * y[1] - 0.5 * k0 * y[0] * y[0] * inv_l2,
            -0.5 * y[3],
        ]
    };
    let q0 = s0.q(k0);
    let mut y = [s0.xc, s0.theta, q0.re, q0.im, s0.amp2.ln(), s0.s_axis, s0.gouy];
    let span = z - s0.z;
    let n = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let axpy = |y: &[f64; 7], k: &[f64; 7], a: f64| -> [f64; 7] { std::array::from_fn(|i| y[i] + a * k[i]) };
    for _ in 0..n {
        let k1 = rhs(&y);
        let k2 = rhs(&axpy(&y, &k1, h / 2.0));
        let k3 = rhs(&axpy(&y, &k2, h / 2.0));
        let k4 = rhs(&axpy(&y, &k3, h));
        for i in 0..7 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let s = GaussianBeamState {
        z,
        xc: y[0],
        theta: y[1],
        w: 0.0,
        r_inv: 0.0,
        amp2: y[4].exp(),
        s_axis: y[5],
        gouy: y[6],
    };
    s.with_q(k0, Complex64::new(y[2], y[3]))
}

/// Beam states at each `z` in `zs`, each propagated from `s0`.
#[derive(Debug, Clone)]
pub struct BeamPath {
    pub states: Vec<GaussianBeamState>,
    /// Stations where the width is not small against `L`.
    pub warnings: Vec<String>,
}

pub fn beam_path(
    medium: &MediumParameters,
    s0: &GaussianBeamState,
    zs: &[f64],
    method: Propagation,
) -> Result<BeamPath, CgoError> {
    let mut states = Vec::with_capacity(zs.len());
    let mut warnings = Vec::new();
    let mut prev = *s0;
    for &z in zs {
        // ODE integration continues from the previous station; the closed form is exact from s0
        let s = match method {
            Propagation::ClosedForm => propagate_beam(medium, s0, z, method)?,
            Propagation::Ode { .. } => propagate_beam(medium, &prev, z, method)?,
        };
        if s.w > 0.1 * medium.length {
            warnings.push(format!(
                "z={z}: width {:.3e} is not small against L={}",
                s.w, medium.length
            ));
        }
        prev = s;
        states.push(s);
    }
    Ok(BeamPath { states, warnings })
}

/// `S`, `φ` and `|u|²` on an `(x, z)` grid, indexed `[x, z]`.
#[derive(Debug, Clone)]
pub struct EikonalFields {
    pub x: Axis,
    pub z: Axis,
    pub k0: f64,
    pub s: Array2<f64>,
    pub phi: Array2<f64>,
    pub u2: Array2<f64>,
    /// `arg u` per `z`.
    pub gouy: Vec<f64>,
}

impl EikonalFields {
    /// `|u|² e^{−2φ}`.
    pub fn intensity(&self) -> Array2<f64> {
        let mut out = self.u2.clone();
        out.zip_mut_with(&self.phi, |u, p| *u *= (-2.0 * p).exp());
        out
    }

    fn value(&self, i: usize, j: usize) -> Complex64 {
        Complex64::from_polar(
            self.u2[[i, j]].sqrt() * (-self.phi[[i, j]]).exp(),
            self.s[[i, j]] + self.gouy[j],
        )
    }

    /// Transverse field `√|u|² e^{−φ + iS + i arg u}` at station `j`.
    pub fn slice(&self, j: usize) -> Result<SampledField, CgoError> {
        let values = (0..self.x.n).map(|i| self.value(i, j)).collect();
        Ok(SampledField::new_1d(self.x, values)?)
    }

    /// The field on the `(x, z)` grid with the carrier `(0, k0)` factored out.
    pub fn envelope_2d(&self) -> Result<SampledField, CgoError> {
        let values = Array2::from_shape_fn((self.x.n, self.z.n), |(i, j)| {
            self.value(i, j) * Complex64::from_polar(1.0, -self.k0 * self.z.coord(j))
        });
        Ok(SampledField::new_2d(self.x, self.z, values)?.with_carrier(vec![0.0, self.k0]))
    }
}

/// Rebuilds the eikonal fields from a beam path sampled on the uniform
/// `z` axis.
pub fn reconstruct_field(k0: f64, path: &[GaussianBeamState], x: Axis) -> Result<EikonalFields, CgoError> {
    if path.len() < 2 {
        return Err(CgoError::Input("beam path needs at least two stations".into()));
    }
    let dz = path[1].z - path[0].z;
    let z = Axis::new(path[0].z, dz, path.len());
    for (j, s) in path.iter().enumerate() {
        if (s.z - z.coord(j)).abs() > 1e-9 * dz.abs().max(1.0) {
            return Err(CgoError::Input(format!("beam path is not uniform in z at station {j}")));
        }
        if s.w < MIN_CELLS_PER_WIDTH * x.step {
            return Err(CgoError::Resolution { w: s.w, dx: x.step });
        }
    }
    let shape = (x.n, z.n);
    let s = Array2::from_shape_fn(shape, |(i, j)| path[j].phase(k0, x.coord(i)));
    let phi = Array2::from_shape_fn(shape, |(i, j)| {
        let t = (x.coord(i) - path[j].xc) / path[j].w;
        t * t
    });
    let u2 = Array2::from_shape_fn(shape, |(_, j)| path[j].amp2);
    Ok(EikonalFields {
        x,
        z,
        k0,
        s,
        phi,
        u2,
        gouy: path.iter().map(|s| s.gouy).collect(),
    })
}

/// Boundary data for one point of the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub x: f64,
    /// `k′` with the normal component last.
    pub k: [f64; 2],
    /// `k″` with the normal component last.
    pub k_imag: [f64; 2],
}

/// Solves the complex boundary conditions on the plane `z = 0` of a 2D
/// symbol, given boundary profiles `S0(x)` and `φ0(x)` written in `x(0)`.
///
/// `k′_x = S0′`, `k″_x = φ0′`; `k′_z` solves
/// `D′ − ½ A_xx k″_x² = 0` with `A = ∂²D′/∂k∂k`, and
/// `k″_z = −k″_x (∂D′/∂k_x)/(∂D′/∂k_z)`.
pub fn cgo_boundary_solve(
    d: &DispersionSymbol,
    s0: &Expr,
    phi0: &Expr,
    xs: &[f64],
    branch: Branch,
) -> Result<Vec<BoundaryPoint>, CgoError> {
    if d.dim() != 2 {
        return Err(CgoError::Input(format!(
            "boundary solve needs a 2D symbol, got {}D",
            d.dim()
        )));
    }
    let space = JetSpace::cached(1, 1);
    let slope = |e: &Expr, x: f64| -> f64 {
        let j = e.eval(&[Jet::variable(&space, 0, x)], &[]);
        j.derivative(&vec![1].into())
    };
    let tol = 1e-12 * d.scale().abs();
    xs.iter()
        .map(|&xb| {
            let (kx, kxi) = (slope(s0, xb), slope(phi0, xb));
            let pos = [xb, 0.0];
            let f = |kz: f64| -> Result<f64, CgoError> {
                let k = [kx, kz];
                let dv = d.derivatives(&pos, &k, 2)?;
                Ok(dv.value - 0.5 * dv.hess_kk[0][0] * kxi * kxi)
            };
            let mut a = solve_dispersion_normal(d, &pos, &[kx], branch)?;
            let mut fa = f(a)?;
            let mut b = a * (1.0 + 1e-6) + 1e-12;
            let mut fb = f(b)?;
            for _ in 0..100 {
                if fb.abs() <= tol || fb == fa {
                    break;
                }
                let c = b - fb * (b - a) / (fb - fa);
                (a, fa) = (b, fb);
                b = c;
                fb = f(b)?;
            }
            if !(fb.abs() <= tol) {
                return Err(CgoError::NoConvergence { x: xb, residual: fb });
            }
            let dv = d.derivatives(&pos, &[kx, b], 1)?;
            let kzi = -kxi * dv.grad_k[0] / dv.grad_k[1];
            Ok(BoundaryPoint {
                x: xb,
                k: [kx, b],
                k_imag: [kxi, kzi],
            })
        })
        .collect()
}

/// Max and root-mean-square of a residual over the interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub max: f64,
    pub rms: f64,
}

/// Normalized residuals of the eikonal, constraint and transport equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgoResiduals {
    /// `(D′ − ½ k″k″:∂²_k D′) / k0^m`.
    pub eikonal: ResidualNorms,
    /// `k″·∂_k D′ / k0^m`.
    pub constraint: ResidualNorms,
    /// `(∇·(∂_k D′ |u|²) − 2D″|u|²) / (k0^{m−1} max|u|² / ℓ)`.
    pub transport: ResidualNorms,
}

/// Fourth-order central difference along `axis` at `(i, j)`.
fn diff4(a: &Array2<f64>, i: usize, j: usize, axis: usize, h: f64) -> f64 {
    let at = |o: isize| -> f64 {
        if axis == 0 {
            a[[(i as isize + o) as usize, j]]
        } else {
            a[[i, (j as isize + o) as usize]]
        }
    };
    (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
}

/// Evaluates the residuals with fourth-order differences, excluding a 10%
/// frame of the grid. `ℓ` is the medium length, or `1/k0` for a
/// homogeneous medium.
pub fn cgo_residuals(fields: &EikonalFields, d: &DispersionSymbol) -> Result<CgoResiduals, CgoError> {
    if d.dim() != 2 {
        return Err(CgoError::Input(format!("residuals need a 2D symbol, got {}D", d.dim())));
    }
    let (nx, nz) = (fields.x.n, fields.z.n);
    let (fx, fz) = (frame(nx), frame(nz));
    if nx < 2 * fx + 1 || nz < 2 * fz + 1 || fx < 4 || fz < 4 {
        return Err(CgoError::Input(format!("grid {nx}×{nz} too small for residuals")));
    }
    let (hx, hz) = (fields.x.step, fields.z.step);
    let mut eik = Vec::new();
    let mut con = Vec::new();
    let mut flux = [Array2::<f64>::zeros((nx, nz)), Array2::<f64>::zeros((nx, nz))];
    let mut loss = Array2::<f64>::zeros((nx, nz));
    for i in 2..nx - 2 {
        for j in 2..nz - 2 {
            let x = [fields.x.coord(i), fields.z.coord(j)];
            let k = [diff4(&fields.s, i, j, 0, hx), diff4(&fields.s, i, j, 1, hz)];
            let kim = [diff4(&fields.phi, i, j, 0, hx), diff4(&fields.phi, i, j, 1, hz)];
            let dv = d.derivatives(&x, &k, 2)?;
            let u2 = fields.u2[[i, j]];
            flux[0][[i, j]] = dv.grad_k[0] * u2;
            flux[1][[i, j]] = dv.grad_k[1] * u2;
            loss[[i, j]] = 2.0 * d.imag.value(&x, &k) * u2;
            if (fx..nx - fx).contains(&i) && (fz..nz - fz).contains(&j) {
                let quad: f64 = (0..2)
                    .flat_map(|a| (0..2).map(move |b| (a, b)))
                    .map(|(a, b)| kim[a] * kim[b] * dv.hess_kk[a][b])
                    .sum();
                eik.push(dv.value - 0.5 * quad);
                con.push(kim[0] * dv.grad_k[0] + kim[1] * dv.grad_k[1]);
            }
        }
    }
    let mut tra = Vec::new();
    for i in fx..nx - fx {
        for j in fz..nz - fz {
            tra.push(diff4(&flux[0], i, j, 0, hx) + diff4(&flux[1], i, j, 1, hz) - loss[[i, j]]);
        }
    }
    let k0 = d.scales.wavenumber;
    let scale = d.scale().abs();
    let ell = if d.scales.length.is_finite() {
        d.scales.length
    } else {
        1.0 / k0
    };
    let umax = fields.u2.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tscale = k0.powi(d.order - 1).abs() * umax / ell;
    Ok(CgoResiduals {
        eikonal: norms(&eik, scale),
        constraint: norms(&con, scale),
        transport: norms(&tra, tscale),
    })
}

fn frame(n: usize) -> usize {
    (n as f64 * 0.1).ceil() as usize
}

fn norms(v: &[f64], scale: f64) -> ResidualNorms {
    let max = v.iter().map(|r| r.abs()).fold(0.0, f64::max) / scale;
    let rms = (v.iter().map(|r| r * r).sum::<f64>() / v.len().max(1) as f64).sqrt() / scale;
    ResidualNorms { max, rms }
}
