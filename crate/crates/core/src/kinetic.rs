//! Wave kinetic equation by characteristics.
//!
//! Rays solve `dx/dτ = ∂D′/∂k`, `dk/dτ = −∂D′/∂x` and carry
//! `d(log W)/dτ = 2D″`. With a coordinate `x_i` as the parameter every
//! right-hand side is divided by `∂D′/∂k_i`. Grid transport is
//! semi-Lagrangian: each target node is traced back to the boundary plane
//! and `W0` is interpolated at the foot.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::interp::cubic2;
use crate::symbols::{DispersionSymbol, SymbolError};
use crate::wigner::{Axis, WignerError, WignerGrid};

/// Largest phase-space dimension the tracer handles.
pub const MAX_DIM: usize = 6;

#[derive(Debug, Error)]
pub enum KineticError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error("no real root of the dispersion relation at x={x:?}, k_tangent={k_tangent:?}")]
    Evanescent { x: Vec<f64>, k_tangent: Vec<f64> },
    #[error("boundary is characteristic at x={x:?}: ∂D′/∂k_N = {slope:.3e}")]
    Characteristic { x: Vec<f64>, slope: f64 },
    #[error("ray integration failed at parameter {param}: {reason}")]
    Integration {
        reason: String,
        param: f64,
        last: PhaseSpacePoint,
    },
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: Vec<f64>,
    pub k: Vec<f64>,
}

impl PhaseSpacePoint {
    pub fn new(x: Vec<f64>, k: Vec<f64>) -> Self {
        Self { x, k }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Root family of `D′ = 0` for the normal wavevector component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// `k_N > 0`.
    Progressive,
    /// `k_N < 0`.
    Regressive,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Progressive => 1.0,
            Branch::Regressive => -1.0,
        }
    }
}

/// Solves `D′(x_b, k_tangent, k_N) = 0` for `k_N` on the requested branch.
///
/// Newton starts from `±k0`; if it fails or leaves the branch, a bracketing
/// scan over `(0, 4k0]` feeds a bisection.
pub fn solve_dispersion_normal(
    d: &DispersionSymbol,
    x_b: &[f64],
    k_tangent: &[f64],
    branch: Branch,
) -> Result<f64, KineticError> {
    let n = d.dim();
    if x_b.len() != n || k_tangent.len() + 1 != n {
        return Err(KineticError::Input(format!(
            "boundary point of length {} and tangent of length {} for a {n}D symbol",
            x_b.len(),
            k_tangent.len()
        )));
    }
    let k0 = d.scales.wavenumber;
    let tol = 1e-10 * d.scale().abs().max(f64::MIN_POSITIVE);
    let mut k: Vec<f64> = k_tangent.to_vec();
    k.push(0.0);
    let mut gx = [0.0; MAX_DIM];
    let mut gk = [0.0; MAX_DIM];
    let mut eval = |kn: f64, gx: &mut [f64], gk: &mut [f64]| -> Result<(f64, f64), KineticError> {
        k[n - 1] = kn;
        d.eval(x_b, &k)?;
        let v = d.real.value_and_gradient(x_b, &k, gx, gk);
        Ok((v, gk[n - 1]))
    };
    let sign = branch.sign();
    // a double root is only resolved to √tol, so grazing is flagged well above it
    let slope_floor = 1e-4 * d.scale().abs() / k0;

    let mut kn = sign * k0;
    for _ in 0..60 {
        let (v, slope) = eval(kn, &mut gx, &mut gk)?;
        if v.abs() < tol {
            if slope.abs() < slope_floor {
                return Err(KineticError::Characteristic { x: x_b.to_vec(), slope });
            }
            if kn * sign > 0.0 {
                return Ok(kn);
            }
            break;
        }
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = kn - v / slope;
        if !next.is_finite() || next * sign <= 0.0 {
            break;
        }
        kn = next;
    }

    // bracketing scan along the branch
    let steps = 400;
    let mut best = (f64::INFINITY, 0.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for i in 1..=steps {
        let t = sign * 4.0 * k0 * i as f64 / steps as f64;
        let v = match eval(t, &mut gx, &mut gk) {
            Ok((v, _)) => v,
            Err(KineticError::Symbol(SymbolError::NonFinite { .. })) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if v.abs() < best.0 {
            best = (v.abs(), t);
        }
        if let Some((tp, vp)) = prev {
            if vp * v <= 0.0 {
                let closer = bracket.is_none_or(|(a, _, _, _): (f64, f64, f64, f64)| {
                    ((tp + t) / 2.0 - sign * k0).abs() < ((a - sign * k0).abs())
                });
                if closer {
                    bracket = Some((tp, vp, t, v));
                }
            }
        }
        prev = Some((t, v));
    }
    let Some((mut a, mut va, mut b, _)) = bracket else {
        if best.0 < 1e-6 * d.scale().abs() {
            let (_, slope) = eval(best.1, &mut gx, &mut gk)?;
            return Err(KineticError::Characteristic { x: x_b.to_vec(), slope });
        }
        return Err(KineticError::Evanescent {
            x: x_b.to_vec(),
            k_tangent: k_tangent.to_vec(),
        });
    };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let (vm, _) = eval(m, &mut gx, &mut gk)?;
        if vm.abs() < tol || (b - a).abs() < 1e-15 * k0 {
            a = m;
            break;
        }
        if va * vm <= 0.0 {
            b = m;
        } else {
            a = m;
            va = vm;
        }
    }
    let (_, slope) = eval(a, &mut gx, &mut gk)?;
    if slope.abs() < slope_floor {
        return Err(KineticError::Characteristic { x: x_b.to_vec(), slope });
    }
    Ok(a)
}

/// Evolution parameter of a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Parametrization {
    /// Canonical Hamiltonian parameter `τ`.
    Canonical,
    /// The coordinate `x_i`.
    Coordinate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Fixed step, or the initial step when adaptive.
    pub step: f64,
    pub adaptive: bool,
    /// Per-step local error bound for step halving, relative to the state.
    pub tolerance: f64,
    pub max_steps: usize,
}

impl StepControl {
    /// Fixed steps of `L/200` in the parameter.
    pub fn fixed_for(d: &DispersionSymbol) -> Self {
        Self {
            step: d.scales.length.min(1e6) / 200.0,
            adaptive: false,
            tolerance: 1e-9,
            max_steps: 10_000_000,
        }
    }

    pub fn adaptive(step: f64, tolerance: f64) -> Self {
        Self {
            step,
            adaptive: true,
            tolerance,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaySample {
    pub param: f64,
    pub point: PhaseSpacePoint,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub samples: Vec<RaySample>,
    /// Transport factor `W(end)/W(start)`.
    pub weight: f64,
    /// `max |D′|` over the samples.
    pub dispersion_residual: f64,
    pub branch: Branch,
}

struct Flow<'a> {
    d: &'a DispersionSymbol,
    n: usize,
    param: Parametrization,
    lossless: bool,
}

type State = [f64; 2 * MAX_DIM + 1];

impl<'a> Flow<'a> {
    fn new(d: &'a DispersionSymbol, param: Parametrization) -> Result<Self, KineticError> {
        let n = d.dim();
        if n == 0 || n > MAX_DIM {
            return Err(KineticError::Input(format!("unsupported dimension {n}")));
        }
        if let Parametrization::Coordinate(i) = param {
            if i >= n {
                return Err(KineticError::Input(format!("coordinate {i} out of range")));
            }
        }
        Ok(Self {
            d,
            n,
            param,
            lossless: d.imag.is_zero(),
        })
    }

    fn len(&self) -> usize {
        2 * self.n + 1
    }

    fn rhs(&self, y: &State, dy: &mut State) -> Result<(), String> {
        let n = self.n;
        let (x, k) = (&y[..n], &y[n..2 * n]);
        let mut gx = [0.0; MAX_DIM];
        let mut gk = [0.0; MAX_DIM];
        self.d.real.value_and_gradient(x, k, &mut gx, &mut gk);
        let dpp = if self.lossless { 0.0 } else { self.d.imag.value(x, k) };
        let scale = match self.param {
            Parametrization::Canonical => 1.0,
            Parametrization::Coordinate(i) => {
                if gk[i] == 0.0 || !gk[i].is_finite() {
                    return Err(format!("∂D′/∂k_{i} vanishes; coordinate parametrization breaks down"));
                }
                1.0 / gk[i]
            }
        };
        for i in 0..n {
            dy[i] = gk[i] * scale;
            dy[n + i] = -gx[i] * scale;
        }
        dy[2 * n] = 2.0 * dpp * scale;
        if dy[..self.len()].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err("non-finite right-hand side".into())
        }
    }

    fn rk4(&self, y: &State, h: f64) -> Result<State, String> {
        let m = self.len();
        let mut k1 = [0.0; 2 * MAX_DIM + 1];
        let mut k2 = k1;
        let mut k3 = k1;
        let mut k4 = k1;
        let mut tmp = k1;
        self.rhs(y, &mut k1)?;
        for i in 0..m {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        self.rhs(&tmp, &mut k2)?;
        for i in 0..m {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        self.rhs(&tmp, &mut k3)?;
        for i in 0..m {
            tmp[i] = y[i] + h * k3[i];
        }
        self.rhs(&tmp, &mut k4)?;
        let mut out = *y;
        for i in 0..m {
            out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(out)
    }

    fn point(&self, y: &State) -> PhaseSpacePoint {
        PhaseSpacePoint::new(y[..self.n].to_vec(), y[self.n..2 * self.n].to_vec())
    }

    fn fail(&self, reason: String, param: f64, y: &State) -> KineticError {
        KineticError::Integration {
            reason,
            param,
            last: self.point(y),
        }
    }

    /// Advances `y` from `from` to `to`, calling `visit` after every accepted
    /// step.
    fn integrate(
        &self,
        y: &mut State,
        from: f64,
        to: f64,
        control: &StepControl,
        visit: &mut dyn FnMut(f64, &State),
    ) -> Result<(), KineticError> {
        let span = to - from;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        if !control.adaptive {
            let steps = (span.abs() / control.step).ceil().max(1.0) as usize;
            if steps > control.max_steps {
                return Err(self.fail("too many steps".into(), from, y));
            }
            let h = span / steps as f64;
            for s in 0..steps {
                let t = from + h * s as f64;
                *y = self.rk4(y, h).map_err(|r| self.fail(r, t, y))?;
                visit(if s + 1 == steps { to } else { t + h }, y);
            }
            return Ok(());
        }
        let m = self.len();
        let mut t = from;
        let mut h = control.step.abs().min(span.abs()) * dir;
        let min_step = 1e-12 * span.abs();
        let mut taken = 0;
        while (to - t) * dir > 0.0 {
            if (t + h - to) * dir > 0.0 {
                h = to - t;
            }
            let full = self.rk4(y, h).map_err(|r| self.fail(r, t, y))?;
            let half = self.rk4(y, 0.5 * h).map_err(|r| self.fail(r, t, y))?;
            let two = self.rk4(&half, 0.5 * h).map_err(|r| self.fail(r, t, y))?;
            let mut err = 0.0f64;
            for i in 0..m {
                let scale = 1.0 + two[i].abs();
                err = err.max((two[i] - full[i]).abs() / 15.0 / scale);
            }
            if err <= control.tolerance {
                t = if (to - (t + h)) * dir <= 0.0 { to } else { t + h };
                *y = two;
                visit(t, y);
                taken += 1;
                if taken > control.max_steps {
                    return Err(self.fail("too many steps".into(), t, y));
                }
                let grow = if err == 0.0 {
                    2.0
                } else {
                    (0.9 * (control.tolerance / err).powf(0.2)).min(2.0)
                };
                h *= grow.max(1.0);
            } else {
                h *= (0.9 * (control.tolerance / err).powf(0.2)).max(0.1);
                if h.abs() < min_step {
                    return Err(self.fail("step size collapsed".into(), t, y));
                }
            }
        }
        Ok(())
    }
}

/// Traces a ray from `p0` over the parameter interval `[start, end]`.
pub fn trace_ray(
    d: &DispersionSymbol,
    p0: &PhaseSpacePoint,
    span: (f64, f64),
    param: Parametrization,
    control: &StepControl,
    branch: Branch,
) -> Result<Ray, KineticError> {
    let flow = Flow::new(d, param)?;
    let n = flow.n;
    if p0.x.len() != n || p0.k.len() != n {
        return Err(KineticError::Input("start point has the wrong dimension".into()));
    }
    let tol = 1e-6 * d.scale().abs().max(1.0);
    let (d0, _) = d.eval(&p0.x, &p0.k)?;
    if d0.abs() > tol {
        return Err(KineticError::Input(format!(
            "start point is off the dispersion surface: D′ = {d0:.3e}"
        )));
    }
    let mut y: State = [0.0; 2 * MAX_DIM + 1];
    y[..n].copy_from_slice(&p0.x);
    y[n..2 * n].copy_from_slice(&p0.k);
    let mut samples = vec![RaySample {
        param: span.0,
        point: p0.clone(),
        weight: 1.0,
    }];
    let mut residual = d0.abs();
    let mut failure = None;
    flow.integrate(&mut y, span.0, span.1, control, &mut |t, s| {
        let point = flow.point(s);
        match d.eval(&point.x, &point.k) {
            Ok((v, _)) => residual = residual.max(v.abs()),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
        samples.push(RaySample {
            param: t,
            point,
            weight: s[2 * n].exp(),
        });
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(Ray {
        weight: y[2 * n].exp(),
        samples,
        dispersion_residual: residual,
        branch,
    })
}

/// Subdivides each gap between consecutive stations into equal steps no
/// longer than `max_step`.
fn station_steps(stations: &[f64], max_step: f64) -> Vec<usize> {
    let mut prev = 0.0;
    stations
        .iter()
        .map(|&z| {
            let n = ((z - prev).abs() / max_step).ceil().max(1.0) as usize;
            prev = z;
            n
        })
        .collect()
}

/// Backward characteristic feet of every `(x, k_x)` node at every station,
/// for a symbol on `(x, z)` with `z` as evolution coordinate.
#[derive(Debug, Clone)]
pub struct FootMap {
    x: Axis,
    k: Axis,
    stations: Vec<f64>,
    /// `feet[s][(i, m)] = (x_f, k_f)`, `NaN` where no foot exists.
    feet: Vec<Array2<(f64, f64)>>,
    pub evanescent_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectOptions {
    /// Largest `z` step of the backward integration.
    pub max_step: f64,
    pub branch: Branch,
}

impl AdvectOptions {
    pub fn for_symbol(d: &DispersionSymbol) -> Self {
        Self {
            max_step: d.scales.length / 200.0,
            branch: Branch::Progressive,
        }
    }
}

impl FootMap {
    pub fn compute(
        d: &DispersionSymbol,
        x: Axis,
        k: Axis,
        stations: &[f64],
        opts: &AdvectOptions,
    ) -> Result<Self, KineticError> {
        if d.dim() != 2 {
            return Err(KineticError::Input(format!(
                "grid advection needs a symbol on (x, z), `{}` is {}D",
                d.name,
                d.dim()
            )));
        }
        if stations.iter().any(|z| !(z.is_finite() && *z >= 0.0)) || stations.windows(2).any(|w| w[1] < w[0]) {
            return Err(KineticError::Input(
                "stations must be finite, non-negative and sorted".into(),
            ));
        }
        let flow = Flow::new(d, Parametrization::Coordinate(1))?;
        let autonomous = !d.real.depends_on_x(1) && !d.imag.depends_on_x(1);
        let steps = station_steps(stations, opts.max_step);
        let control = |n: usize, span: f64| StepControl {
            step: span.abs() / n as f64 * (1.0 + 1e-12),
            adaptive: false,
            tolerance: 1e-9,
            max_steps: usize::MAX,
        };
        let nan = (f64::NAN, f64::NAN);
        let mut feet = vec![Array2::from_elem((x.n, k.n), nan); stations.len()];
        let mut evanescent_nodes = 0;
        for i in 0..x.n {
            for m in 0..k.n {
                let (xi, km) = (x.coord(i), k.coord(m));
                if autonomous {
                    let kz = match solve_dispersion_normal(d, &[xi, 0.0], &[km], opts.branch) {
                        Ok(v) => v,
                        Err(KineticError::Evanescent { .. }) => {
                            evanescent_nodes += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    // one backward trajectory serves every station
                    let mut y: State = [0.0; 2 * MAX_DIM + 1];
                    y[..4].copy_from_slice(&[xi, 0.0, km, kz]);
                    let mut prev = 0.0;
                    for (s, &z) in stations.iter().enumerate() {
                        if z > prev {
                            let c = control(steps[s], z - prev);
                            flow.integrate(&mut y, -prev, -z, &c, &mut |_, _| {})?;
                        }
                        feet[s][[i, m]] = (y[0], y[2]);
                        prev = z;
                    }
                } else {
                    for (s, &z) in stations.iter().enumerate() {
                        let kz = match solve_dispersion_normal(d, &[xi, z], &[km], opts.branch) {
                            Ok(v) => v,
                            Err(KineticError::Evanescent { .. }) => {
                                evanescent_nodes += 1;
                                continue;
                            }
                            Err(e) => return Err(e),
                        };
                        let mut y: State = [0.0; 2 * MAX_DIM + 1];
                        y[..4].copy_from_slice(&[xi, z, km, kz]);
                        let n = ((z / opts.max_step).ceil() as usize).max(1);
                        flow.integrate(&mut y, z, 0.0, &control(n, z), &mut |_, _| {})?;
                        feet[s][[i, m]] = (y[0], y[2]);
                    }
                }
            }
        }
        Ok(Self {
            x,
            k,
            stations: stations.to_vec(),
            feet,
            evanescent_nodes,
        })
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    /// Foot of node `(i, m)` at station `s`.
    pub fn foot(&self, s: usize, i: usize, m: usize) -> Option<(f64, f64)> {
        let f = self.feet[s][[i, m]];
        (!f.0.is_nan()).then_some(f)
    }

    /// `W(x, k, z_s) = W0(foot)` on the map's own grid.
    pub fn apply(&self, w0: &WignerGrid) -> Result<Advection, KineticError> {
        let (ax, ak) = (w0.x_axis(), w0.k_axis());
        let mut missed_feet = 0;
        let mut grids = Vec::with_capacity(self.stations.len());
        for feet in &self.feet {
            let values = Array2::from_shape_fn((self.x.n, self.k.n), |idx| {
                let (xf, kf) = feet[idx];
                if xf.is_nan() {
                    return 0.0;
                }
                match cubic2(w0.values(), ax.position(xf), ak.position(kf)) {
                    Some(v) => v,
                    None => {
                        missed_feet += 1;
                        0.0
                    }
                }
            });
            grids.push(WignerGrid::new(self.x, self.k, values)?);
        }
        Ok(Advection {
            stations: self.stations.clone(),
            grids,
            missed_feet,
            evanescent_nodes: self.evanescent_nodes,
        })
    }
}

/// Wigner grids transported to a list of stations.
#[derive(Debug, Clone)]
pub struct Advection {
    pub stations: Vec<f64>,
    pub grids: Vec<WignerGrid>,
    /// Feet that left the `W0` domain (counted as zero).
    pub missed_feet: usize,
    pub evanescent_nodes: usize,
}

/// Liouville transport of `w0` (given on the boundary plane `z = 0`) to each
/// station, on the same `(x, k_x)` grid.
pub fn advect_wigner(
    d: &DispersionSymbol,
    w0: &WignerGrid,
    stations: &[f64],
    opts: &AdvectOptions,
) -> Result<Advection, KineticError> {
    FootMap::compute(d, w0.x_axis(), w0.k_axis(), stations, opts)?.apply(w0)
}

/// Boundary data of a `δ`-type Wigner function `W = weight·δ(k − k(x))` on
/// the plane `x_N = 0`, in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub x: Axis,
    pub k_tangent: Vec<f64>,
    /// `|u0|² e^{−2φ0}`; zero on evanescent cells.
    pub weight: Vec<f64>,
    /// Solved normal components per branch, `None` where evanescent.
    pub normal: Vec<(Branch, Vec<Option<f64>>)>,
    pub evanescent_cells: usize,
}

impl BoundaryData {
    pub fn solve(
        d: &DispersionSymbol,
        x: Axis,
        k_tangent: impl Fn(f64) -> f64,
        weight: impl Fn(f64) -> f64,
        branches: &[Branch],
    ) -> Result<Self, KineticError> {
        let kt: Vec<f64> = x.coords().into_iter().map(&k_tangent).collect();
        let mut w: Vec<f64> = x.coords().into_iter().map(&weight).collect();
        let mut normal = Vec::new();
        let mut evanescent_cells = 0;
        for &b in branches {
            let mut roots = Vec::with_capacity(x.n);
            for i in 0..x.n {
                match solve_dispersion_normal(d, &[x.coord(i), 0.0], &[kt[i]], b) {
                    Ok(v) => roots.push(Some(v)),
                    Err(KineticError::Evanescent { .. }) => {
                        evanescent_cells += 1;
                        w[i] = 0.0;
                        roots.push(None);
                    }
                    Err(e) => return Err(e),
                }
            }
            normal.push((b, roots));
        }
        Ok(Self {
            x,
            k_tangent: kt,
            weight: w,
            normal,
            evanescent_cells,
        })
    }
}

/// A ray launched into the reduced `(x, k_x)` plane, sampled at stations.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleRay {
    /// `(x, k_x)` at each station.
    pub track: Vec<(f64, f64)>,
    /// Deposited intensity weight, including the branch fraction.
    pub weight: f64,
    pub branch: Branch,
    pub dispersion_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayBundle {
    pub stations: Vec<f64>,
    pub rays: Vec<BundleRay>,
}

impl RayBundle {
    /// One ray per `W0` node, weighted by `W0·dx·dk/(2π)` times
    /// `branch_fraction`. Nodes below `1e-12` of the peak are skipped.
    pub fn from_wigner(
        d: &DispersionSymbol,
        w0: &WignerGrid,
        stations: &[f64],
        opts: &AdvectOptions,
        branch_fraction: f64,
    ) -> Result<Self, KineticError> {
        let (ax, ak) = (w0.x_axis(), w0.k_axis());
        let peak = w0.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cell = ax.step * ak.step / (2.0 * std::f64::consts::PI);
        let mut launches = Vec::new();
        for ((i, m), &v) in w0.values().indexed_iter() {
            if v.abs() > 1e-12 * peak {
                launches.push((ax.coord(i), ak.coord(m), v * cell));
            }
        }
        Self::launch(d, &launches, stations, opts, branch_fraction)
    }

    /// `n_rays` launches drawn uniformly over the `W0` grid from a seeded
    /// stream, each carrying its Monte Carlo share of `W0`.
    pub fn sample_wigner(
        d: &DispersionSymbol,
        w0: &WignerGrid,
        stations: &[f64],
        opts: &AdvectOptions,
        branch_fraction: f64,
        n_rays: usize,
        seed: u64,
    ) -> Result<Self, KineticError> {
        let (ax, ak) = (w0.x_axis(), w0.k_axis());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span_x = ax.step * (ax.n - 1) as f64;
        let span_k = ak.step * (ak.n - 1) as f64;
        let share = span_x * span_k / (2.0 * std::f64::consts::PI * n_rays as f64);
        let launches: Vec<(f64, f64, f64)> = (0..n_rays)
            .map(|_| {
                let fx: f64 = rng.gen_range(0.0..(ax.n - 1) as f64);
                let fk: f64 = rng.gen_range(0.0..(ak.n - 1) as f64);
                let v = cubic2(w0.values(), fx, fk).unwrap_or(0.0);
                (ax.origin + fx * ax.step, ak.origin + fk * ak.step, v * share)
            })
            .collect();
        Self::launch(d, &launches, stations, opts, branch_fraction)
    }

    fn launch(
        d: &DispersionSymbol,
        launches: &[(f64, f64, f64)],
        stations: &[f64],
        opts: &AdvectOptions,
        branch_fraction: f64,
    ) -> Result<Self, KineticError> {
        let flow = Flow::new(d, Parametrization::Coordinate(1))?;
        let steps = station_steps(stations, opts.max_step);
        let mut rays = Vec::with_capacity(launches.len());
        for &(x0, k0, w) in launches {
            let kz = match solve_dispersion_normal(d, &[x0, 0.0], &[k0], opts.branch) {
                Ok(v) => v,
                Err(KineticError::Evanescent { .. }) => continue,
                Err(e) => return Err(e),
            };
            let mut y: State = [0.0; 2 * MAX_DIM + 1];
            y[..4].copy_from_slice(&[x0, 0.0, k0, kz]);
            let mut track = Vec::with_capacity(stations.len());
            let mut residual = 0.0f64;
            let mut prev = 0.0;
            for (s, &z) in stations.iter().enumerate() {
                if z > prev {
                    let c = StepControl {
                        step: (z - prev) / steps[s] as f64 * (1.0 + 1e-12),
                        adaptive: false,
                        tolerance: 1e-9,
                        max_steps: usize::MAX,
                    };
                    flow.integrate(&mut y, prev, z, &c, &mut |_, _| {})?;
                }
                residual = residual.max(d.eval(&y[..2], &y[2..4])?.0.abs());
                track.push((y[0], y[2]));
                prev = z;
            }
            rays.push(BundleRay {
                track,
                weight: w * branch_fraction * y[4].exp(),
                branch: opts.branch,
                dispersion_residual: residual,
            });
        }
        Ok(Self {
            stations: stations.to_vec(),
            rays,
        })
    }

    /// Union of two bundles over the same stations.
    pub fn merge(mut self, other: RayBundle) -> Result<Self, KineticError> {
        if self.stations != other.stations {
            return Err(KineticError::Input("bundles have different stations".into()));
        }
        self.rays.extend(other.rays);
        Ok(self)
    }

    pub fn max_dispersion_residual(&self) -> f64 {
        self.rays.iter().fold(0.0, |a, r| a.max(r.dispersion_residual))
    }
}

/// Intensity at one station from a bundle: every ray deposits its weight
/// with a normalized Gaussian kernel two cells wide. All branches add.
pub fn project_bundle(bundle: &RayBundle, station: usize, x: Axis) -> Vec<f64> {
    let sigma = 2.0 * x.step;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let reach = (6.0 * sigma / x.step).ceil() as i64;
    let mut out = vec![0.0; x.n];
    for ray in &bundle.rays {
        let xr = ray.track[station].0;
        let centre = x.position(xr).round() as i64;
        for i in (centre - reach).max(0)..(centre + reach + 1).min(x.n as i64) {
            let u = (x.coord(i as usize) - xr) / sigma;
            out[i as usize] += ray.weight * norm * (-0.5 * u * u).exp();
        }
    }
    out
}

/// Intensity from a Wigner grid: its k-marginal.
pub fn project_grid(w: &WignerGrid) -> Vec<f64> {
    crate::wigner::marginal_intensity(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{helmholtz_lenslike, paraxial_oscillator, MediumParameters};
    use std::f64::consts::PI;

    fn medium() -> MediumParameters {
        MediumParameters::new(100.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn normal_roots() {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        let kz = solve_dispersion_normal(&d, &[0.0, 0.0], &[0.0], Branch::Progressive).unwrap();
        assert!((kz - m.k0).abs() < 1e-12 * m.k0);
        let kz = solve_dispersion_normal(&d, &[0.0, 0.0], &[0.1 * m.k0], Branch::Progressive).unwrap();
        assert!((kz - 0.99f64.sqrt() * m.k0).abs() < 1e-10 * m.k0);
        let kz = solve_dispersion_normal(&d, &[0.0, 0.0], &[0.1 * m.k0], Branch::Regressive).unwrap();
        assert!((kz + 0.99f64.sqrt() * m.k0).abs() < 1e-10 * m.k0);
        assert!(matches!(
            solve_dispersion_normal(&d, &[0.0, 0.0], &[1.5 * m.k0], Branch::Progressive),
            Err(KineticError::Evanescent { .. })
        ));
        assert!(matches!(
            solve_dispersion_normal(&d, &[0.0, 0.0], &[m.k0], Branch::Progressive),
            Err(KineticError::Characteristic { .. })
        ));
    }

    #[test]
    fn paraxial_half_period_flip() {
        let m = medium();
        let d = paraxial_oscillator(&m);
        let x0 = 0.05;
        let kz = solve_dispersion_normal(&d, &[x0, 0.0], &[0.0], Branch::Progressive).unwrap();
        let p0 = PhaseSpacePoint::new(vec![x0, 0.0], vec![0.0, kz]);
        let ray = trace_ray(
            &d,
            &p0,
            (0.0, PI * m.length),
            Parametrization::Coordinate(1),
            &StepControl::fixed_for(&d),
            Branch::Progressive,
        )
        .unwrap();
        let end = &ray.samples.last().unwrap().point;
        assert!((end.x[0] + x0).abs() < 1e-9);
        assert!(end.k[0].abs() < 1e-8);
        assert_eq!(ray.weight, 1.0);
    }

    #[test]
    fn adaptive_matches_fixed() {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        let kz = solve_dispersion_normal(&d, &[0.1, 0.0], &[3.0], Branch::Progressive).unwrap();
        let p0 = PhaseSpacePoint::new(vec![0.1, 0.0], vec![3.0, kz]);
        let span = (0.0, 2.0);
        let a = trace_ray(
            &d,
            &p0,
            span,
            Parametrization::Coordinate(1),
            &StepControl::fixed_for(&d),
            Branch::Progressive,
        )
        .unwrap();
        let b = trace_ray(
            &d,
            &p0,
            span,
            Parametrization::Coordinate(1),
            &StepControl::adaptive(0.1, 1e-11),
            Branch::Progressive,
        )
        .unwrap();
        let (pa, pb) = (&a.samples.last().unwrap().point, &b.samples.last().unwrap().point);
        assert!((pa.x[0] - pb.x[0]).abs() < 1e-8);
        assert!((pa.k[0] - pb.k[0]).abs() < 1e-6);
    }

    #[test]
    fn identity_at_zero() {
        let m = medium();
        let d = paraxial_oscillator(&m);
        let (x, k) = (Axis::centered(0.01, 32), Axis::centered(2.0, 32));
        let w0 = WignerGrid::from_fn(x, k, |x, k| (-x * x / 0.01 - k * k / 400.0).exp());
        let adv = advect_wigner(&d, &w0, &[0.0], &AdvectOptions::for_symbol(&d)).unwrap();
        for (a, b) in adv.grids[0].values().iter().zip(w0.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
