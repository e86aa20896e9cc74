use std::f64::consts::PI;

use semiclass::kinetic::{
    advect_wigner, solve_dispersion_normal, trace_ray, AdvectOptions, Branch, Parametrization, PhaseSpacePoint,
    RayBundle, StepControl,
};
use semiclass::oracle::LensLikeScenario;
use semiclass::symbols::{helmholtz_lenslike, paraxial_oscillator, DispersionSymbol, MediumParameters};
use semiclass::wigner::{marginal_intensity, wigner_transform, Axis};

fn scenario(x0: f64) -> LensLikeScenario {
    LensLikeScenario::from_ratio(400.0, 0.1, 0.5, x0, 1.0).unwrap()
}

/// `(x, k_x)` at `z` of the ray launched from `(x0, k_x0)` at `z = 0`.
fn flow(d: &DispersionSymbol, x0: f64, kx0: f64, z: f64) -> (f64, f64) {
    let kz = solve_dispersion_normal(d, &[x0, 0.0], &[kx0], Branch::Progressive).unwrap();
    let control = StepControl {
        step: z / 2000.0,
        adaptive: false,
        tolerance: 1e-9,
        max_steps: usize::MAX,
    };
    let p0 = PhaseSpacePoint::new(vec![x0, 0.0], vec![kx0, kz]);
    let ray = trace_ray(
        d,
        &p0,
        (0.0, z),
        Parametrization::Coordinate(1),
        &control,
        Branch::Progressive,
    )
    .unwrap();
    let end = &ray.samples.last().unwrap().point;
    (end.x[0], end.k[0])
}

#[test]
fn reduced_flow_preserves_phase_space_area() {
    let s = scenario(0.0);
    let d = helmholtz_lenslike(&s.medium);
    let z = 0.7 * PI * s.medium.length;
    let (hx, hk) = (1e-4 * s.w0, 1e-4 / s.w0);
    for &(x0, kx0) in &[(0.0, 0.0), (0.05, 3.0), (-0.12, -8.0)] {
        let dx = |sign: f64| flow(&d, x0 + sign * hx, kx0, z);
        let dk = |sign: f64| flow(&d, x0, kx0 + sign * hk, z);
        let (xp, xm) = (dx(1.0), dx(-1.0));
        let (kp, km) = (dk(1.0), dk(-1.0));
        let j11 = (xp.0 - xm.0) / (2.0 * hx);
        let j21 = (xp.1 - xm.1) / (2.0 * hx);
        let j12 = (kp.0 - km.0) / (2.0 * hk);
        let j22 = (kp.1 - km.1) / (2.0 * hk);
        let det = j11 * j22 - j12 * j21;
        assert!((det - 1.0).abs() <= 1e-9, "det {det} at ({x0}, {kx0})");
    }
}

#[test]
fn advection_conserves_intensity() {
    let s = scenario(0.5 * 0.1);
    let d = paraxial_oscillator(&s.medium);
    let launch = s.launch_field(Axis::centered(s.w0 / 32.0, 512)).unwrap();
    let (x, k) = (Axis::spanning(-0.4, 0.4, 128), Axis::spanning(-160.0, 160.0, 128));
    let w0 = wigner_transform(&launch, 2).unwrap().resample(x, k);
    let total = |w: &semiclass::wigner::WignerGrid| marginal_intensity(w).iter().sum::<f64>() * x.step;
    let initial = total(&w0);
    let stations: Vec<f64> = (0..8).map(|j| j as f64 * 0.25 * PI * s.medium.length).collect();
    let adv = advect_wigner(&d, &w0, &stations, &AdvectOptions::for_symbol(&d)).unwrap();
    for (z, grid) in adv.stations.iter().zip(&adv.grids) {
        let p = total(grid);
        assert!((p / initial - 1.0).abs() <= 1e-3, "power {p} vs {initial} at z = {z}");
    }
}

/// Splitting the launch weight between the two roots of the dispersion
/// relation leaves the total deposited weight unchanged.
#[test]
fn branch_split_preserves_total_weight() {
    let m = MediumParameters::new(400.0, 2.0, 1.0).unwrap();
    let d = helmholtz_lenslike(&m);
    let s = LensLikeScenario::new(m, 0.1, 0.0, 1.0).unwrap();
    let (x, k) = (Axis::spanning(-0.3, 0.3, 32), Axis::spanning(-40.0, 40.0, 32));
    let w0 = wigner_transform(&s.launch_field(Axis::centered(s.w0 / 32.0, 512)).unwrap(), 2)
        .unwrap()
        .resample(x, k);
    let stations = [0.0, 0.5, 1.0];
    let opts = |branch| AdvectOptions { max_step: 0.01, branch };
    let single = RayBundle::from_wigner(&d, &w0, &stations, &opts(Branch::Progressive), 1.0).unwrap();
    let forward = RayBundle::from_wigner(&d, &w0, &stations, &opts(Branch::Progressive), 0.5).unwrap();
    let backward = RayBundle::from_wigner(&d, &w0, &stations, &opts(Branch::Regressive), 0.5).unwrap();
    let split = forward.merge(backward).unwrap();
    let weight = |b: &RayBundle| b.rays.iter().map(|r| r.weight).sum::<f64>();
    assert_eq!(split.rays.len(), 2 * single.rays.len());
    assert!((weight(&split) / weight(&single) - 1.0).abs() <= 1e-12);
    assert!(split.rays.iter().any(|r| r.branch == Branch::Regressive));
}
