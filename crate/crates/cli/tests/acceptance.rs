//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use ndarray::Ix2;
use semiclass::cgo::{beam_path, cgo_residuals, reconstruct_field, Propagation};
use semiclass::moments::{
    cgo_moment_table, cgo_series_pair, dispersion_moment_residuals, multinomial_reduce_exact, MomentTable,
};
use semiclass::multi_index::MultiIndex;
use semiclass::oracle::LensLikeScenario;
use semiclass::symbols::{builtin, helmholtz_lenslike, MediumParameters};
use semiclass::wigner::{marginal_intensity, tanh_window, weyl_apply, wigner_transform, Axis, SampledField};
use semiclass_cli::config::{ScenarioConfig, ScenarioKind};
use semiclass_cli::pipeline::{
    center_trace_error_cells, column_widths, expected_foci, focal_stations, focusing_cases, focusing_metrics,
    l2_relative, linf_relative, moment_truncation, trace_launch_rays, CaseResult,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// A panic inside a criterion counts as a failure of that criterion only.
fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn width_law() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for ratio in [0.5, 1.0, 2.0] {
        let s = LensLikeScenario::from_ratio(400.0, 0.1, ratio, 0.0, 1.0).unwrap();
        let l = s.medium.length;
        let zs: Vec<f64> = (0..200).map(|n| 2.0 * PI * l * n as f64 / 199.0).collect();
        let path = beam_path(
            &s.medium,
            &s.launch_state(),
            &zs,
            Propagation::Ode { max_step: l / 200.0 },
        )
        .unwrap();
        for st in &path.states {
            worst = worst.max((st.w / s.analytic_width(st.z) - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max relative width error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn kinetic_vs_analytic(cases: &[CaseResult], elapsed: Duration) -> Outcome {
    let l = cases[0].scenario.medium.length;
    let has_focus = cases[0].stations.iter().any(|z| (z - PI * l / 2.0).abs() < 1e-12 * l);
    let errs: Vec<f64> = cases
        .iter()
        .map(|c| linf_relative(c.kinetic.as_ref().unwrap(), &c.analytic))
        .collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        has_focus && cases.len() == 2 && worst < 0.01 && elapsed < Duration::from_secs(60),
        format!(
            "L∞/peak {:.2e} (x0=0), {:.2e} (x0=w0/2), {} stations, focal plane sampled: {has_focus}, {elapsed:.2?}",
            errs[0],
            errs[1],
            cases[0].stations.len()
        ),
    )
}

fn kinetic_vs_cgo(cases: &[CaseResult]) -> Outcome {
    let errs: Vec<f64> = cases
        .iter()
        .map(|c| l2_relative(c.kinetic.as_ref().unwrap(), c.cgo.as_ref().unwrap()))
        .collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst < 0.01,
        format!("per-station L2 relative {:.2e}, {:.2e}", errs[0], errs[1]),
    )
}

fn splitstep_oracle(cases: &[CaseResult]) -> Outcome {
    let mut worst_l2 = 0.0f64;
    let mut worst_focus = 0.0f64;
    let mut go_width = 0.0f64;
    for c in cases {
        let ss = c.splitstep.as_ref().unwrap();
        worst_l2 = worst_l2.max(l2_relative(ss, &c.analytic));
        let l = c.scenario.medium.length;
        let j = c
            .stations
            .iter()
            .position(|z| (z - PI * l / 2.0).abs() < 1e-12 * l)
            .unwrap();
        let predicted = c.scenario.ratio();
        let w_ss = column_widths(ss, c.x).unwrap()[j] / c.scenario.w0;
        let w_an = c.scenario.analytic_width(c.stations[j]) / c.scenario.w0;
        worst_focus = worst_focus
            .max((w_ss / predicted - 1.0).abs())
            .max((w_an / predicted - 1.0).abs());
        go_width = go_width.max((c.stations[j] / l).cos().abs());
    }
    outcome(
        worst_l2 < 1e-6 && worst_focus < 0.01 && go_width < 0.01,
        format!(
            "split-step vs closed form L2 {worst_l2:.2e}; focal width/w0 off L/zR by {worst_focus:.2e}; ray-optics width/w0 at focus {go_width:.1e}"
        ),
    )
}

fn focusing_maps(cases: &[CaseResult]) -> Outcome {
    let mut focus_err = 0.0f64;
    let mut trace_err = 0.0f64;
    let mut found = Vec::new();
    for c in cases {
        let k = c.kinetic.as_ref().unwrap();
        let l = c.scenario.medium.length;
        let foci = focal_stations(k);
        let expected = expected_foci(&c.stations, l);
        if foci.len() != expected.len() {
            focus_err = f64::INFINITY;
        } else {
            for (f, e) in foci.iter().zip(&expected) {
                focus_err = focus_err.max((*f as f64 - e).abs());
            }
        }
        found.push(foci);
    }
    let offset = &cases[1];
    trace_err = trace_err.max(center_trace_error_cells(offset, offset.kinetic.as_ref().unwrap()));
    outcome(
        focus_err <= 1.0 && trace_err <= 1.0,
        format!("focal stations {found:?} (error {focus_err} cells); x0=w0/2 centre trace error {trace_err:.2} cells"),
    )
}

fn ray_properties() -> Outcome {
    let cfg = ScenarioConfig {
        scenario: ScenarioKind::Rays,
        rays: 9,
        ..ScenarioConfig::default()
    };
    let m = MediumParameters::new(cfg.k0, cfg.length(), 1.0).unwrap();
    let d = builtin("helmholtz_lenslike", &m).unwrap();
    let rays = trace_launch_rays(&cfg, &d).unwrap();
    let (mut drift, mut kz, mut weight_exact) = (0.0f64, 0.0f64, true);
    for ray in &rays {
        let kz0 = ray.samples[0].point.k[1];
        for s in &ray.samples {
            drift = drift.max(d.eval(&s.point.x, &s.point.k).unwrap().0.abs() / d.scale());
            kz = kz.max((s.point.k[1] - kz0).abs() / cfg.k0);
            weight_exact &= s.weight == 1.0;
        }
        weight_exact &= ray.weight == 1.0;
    }
    outcome(
        drift <= 1e-9 && kz <= 1e-9 && weight_exact,
        format!(
            "|D′| drift {drift:.1e}, k_z drift {kz:.1e}, weights exactly 1: {weight_exact} ({} rays)",
            rays.len()
        ),
    )
}

fn wigner_suite() -> Outcome {
    let w0 = 0.1;
    let axis = Axis::centered(w0 / 32.0, 512);
    let packet = |x: f64, a: f64, q: f64| -> Complex64 {
        let t = (x - a) / w0;
        Complex64::from_polar((w0 * (PI / 2.0).sqrt()).powf(-0.5) * (-t * t).exp(), q * x)
    };
    // chirped, shifted packet for the marginal identity
    let chirped = SampledField::from_fn_1d(axis, |x| {
        packet(x, 0.03, 20.0) * Complex64::from_polar(1.0, 300.0 * x * x)
    })
    .unwrap();
    let w = wigner_transform(&chirped, 2).unwrap();
    let marginal = marginal_intensity(&w);
    let marginal_err = chirped
        .samples()
        .iter()
        .zip(&marginal)
        .map(|(p, m)| (p.norm_sqr() - m).abs())
        .fold(0.0, f64::max);
    let g = wigner_transform(&SampledField::from_fn_1d(axis, |x| packet(x, 0.0, 0.0)).unwrap(), 2).unwrap();
    let peak = g.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (a, q) = (w0, 60.0);
    let moved = wigner_transform(&SampledField::from_fn_1d(axis, |x| packet(x, a, q)).unwrap(), 2).unwrap();
    let (i0, m0) = g.argmax();
    let (i1, m1) = moved.argmax();
    let dx_cells = ((moved.x_axis().coord(i1) - g.x_axis().coord(i0)) - a).abs() / axis.step;
    let dk_cells = ((moved.k_axis().coord(m1) - g.k_axis().coord(m0)) - q).abs() / g.k_axis().step;
    outcome(
        marginal_err <= 1e-10 && (peak - 2.0).abs() <= 1e-6 && dx_cells <= 1.0 && dk_cells <= 1.0,
        format!(
            "marginal error {marginal_err:.1e}, Gaussian peak {peak:.9}, covariance offsets {dx_cells:.2}/{dk_cells:.2} cells"
        ),
    )
}

fn moment_machinery() -> Outcome {
    let mut multinomial = true;
    let samples = [(1, 3), (-2, 5), (7, 4)];
    for dim in 1..=3 {
        let a: Vec<BigRational> = samples[..dim]
            .iter()
            .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
            .collect();
        for n in 0..=6 {
            let (l, r) = multinomial_reduce_exact(&a, n);
            multinomial &= l == r;
        }
    }
    let m = MediumParameters::new(50.0, 1.0, 1.0).unwrap();
    let d = helmholtz_lenslike(&m);
    let (x, k, kpp) = ([0.2, 0.0], [7.0, 45.0], [3.0, -2.0]);
    let table = cgo_moment_table(&kpp, 8);
    let res = dispersion_moment_residuals(&d, &x, &k, &table, 4, 4).unwrap();
    let (even, odd) = cgo_series_pair(&d, &x, &k, &kpp, 2).unwrap();
    let mut collapse = 0.0f64;
    for (beta, v) in &res.values {
        let n = beta.order();
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let base = if n % 2 == 0 { even } else { odd };
        let expect = sign * beta.pow(&kpp) * base;
        collapse = collapse.max((v - expect).abs() / (1.0 + expect.abs()));
    }
    let cfg = ScenarioConfig {
        moment_order: 4,
        moment_spread: 0.1,
        ..ScenarioConfig::default()
    };
    let (rows, _) = moment_truncation(&cfg).unwrap();
    let (err2, err4) = (rows[1][3], rows[2][3]);
    let ratio = err4 / err2;
    let predicted = 2.5 * cfg.moment_spread * cfg.moment_spread;
    let ratio_ok = err4 < err2 && ratio / predicted < 2.0 && predicted / ratio < 2.0;
    let d0 = d.eval(&x, &k).unwrap().0;
    let go = dispersion_moment_residuals(&d, &x, &k, &MomentTable::delta(2), 0, 2).unwrap();
    let go_exact = go.values[&MultiIndex::zero(2)] == d0;
    outcome(
        multinomial && collapse < 1e-12 && ratio_ok && go_exact,
        format!(
            "multinomial exact: {multinomial}; collapse error {collapse:.1e}; err4/err2 {ratio:.4} vs {predicted:.4}; K₀-only residual equals D′: {go_exact}"
        ),
    )
}

struct ResidualSample {
    eikonal: f64,
    constraint: f64,
    transport: f64,
    weyl: f64,
}

fn residual_sample(kappa: f64) -> ResidualSample {
    // L = 1, L/zR = 0.5
    let l = 1.0;
    let w0 = (4.0 * l / kappa).sqrt();
    let s = LensLikeScenario::from_ratio(kappa / l, w0, 0.5, 0.5 * w0, 1.0).unwrap();
    let m = s.medium;
    let d = helmholtz_lenslike(&m);
    let x = Axis::spanning(-6.0 * w0, 6.0 * w0, 256);
    let nz = 512;
    let zs: Vec<f64> = (0..nz).map(|j| 2.0 * PI * l * j as f64 / nz as f64).collect();
    let path = beam_path(&m, &s.launch_state(), &zs, Propagation::ClosedForm).unwrap();
    let fields = reconstruct_field(m.k0, &path.states, x).unwrap();
    let r = cgo_residuals(&fields, &d).unwrap();

    let window = tanh_window(nz, 48.0, 4.0);
    let env = fields.envelope_2d().unwrap();
    let mut values = env.values().clone().into_dimensionality::<Ix2>().unwrap();
    for ((_, j), v) in values.indexed_iter_mut() {
        *v *= window[j];
    }
    let windowed = SampledField::new_2d(env.axes()[0], env.axes()[1], values)
        .unwrap()
        .with_carrier(vec![0.0, m.k0]);
    let out = weyl_apply(&d, &windowed).unwrap();
    let (fx, jz) = (26, 128);
    let (mut num, mut den) = (0.0, 0.0);
    for i in fx..x.n - fx {
        for j in jz..nz - jz {
            num += out.values()[[i, j]].norm_sqr();
            den += windowed.values()[[i, j]].norm_sqr();
        }
    }
    ResidualSample {
        eikonal: r.eikonal.max,
        constraint: r.constraint.max,
        transport: r.transport.max,
        weyl: (num / den).sqrt() / d.scale(),
    }
}

fn cgo_asymptotics() -> Outcome {
    let a = residual_sample(400.0);
    let b = residual_sample(1600.0);
    let order = |p: f64, q: f64| (p / q).log2();
    let orders = [
        order(a.eikonal, b.eikonal),
        order(a.constraint, b.constraint),
        order(a.transport, b.transport),
    ];
    let weyl = order(a.weyl, b.weyl);
    outcome(
        orders.iter().all(|o| *o >= 1.7) && weyl >= 0.8,
        format!(
            "measured orders eikonal {:.2}, constraint {:.2}, transport {:.2}, Weyl {:.2} (residuals at ε: {:.1e}, {:.1e}, {:.1e}, {:.1e})",
            orders[0], orders[1], orders[2], weyl, a.eikonal, a.constraint, a.transport, a.weyl
        ),
    )
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("semiclass-acceptance-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let configs = [
        "[grid]\nnx = 128\nnk = 128\nstations = 32\n",
        "[scenario]\nname = rays\n[medium]\nsymbol = helmholtz_lenslike\n[method]\nrays = 8\n[run]\nseed = 11\n",
    ];
    let mut identical = true;
    let (mut files, mut images) = (0, 0);
    for (n, text) in configs.iter().enumerate() {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let dir = scratch_dir(&format!("{n}-{rep}"));
            fs::create_dir_all(&dir).unwrap();
            let conf = dir.join("run.conf");
            fs::write(&conf, text).unwrap();
            let out = dir.join("out");
            let status = Command::new(env!("CARGO_BIN_EXE_semiclass"))
                .args(["run", conf.to_str().unwrap(), "--out", out.to_str().unwrap()])
                .output()
                .unwrap();
            identical &= status.status.success();
            runs.push(read_all(&out));
            let _ = fs::remove_dir_all(&dir);
        }
        files += runs[0].len();
        images += runs[0].iter().filter(|(name, _)| name.ends_with(".pgm")).count();
        identical &= runs[0] == runs[1];
    }
    outcome(
        identical && images > 0,
        format!("{files} artifacts ({images} PGM) from repeated runs, byte-identical: {identical}"),
    )
}

fn main() -> ExitCode {
    let cfg = ScenarioConfig::default();
    let start = Instant::now();
    let cases = focusing_cases(&cfg).expect("focusing pipeline");
    let focusing_elapsed = start.elapsed();
    for m in focusing_metrics(&cfg, &cases) {
        println!("  metric {} = {:.3e}", m.name, m.value);
    }
    let results = vec![
        ("beam-width law", guarded(width_law)),
        (
            "kinetic vs closed-form intensity",
            guarded(|| kinetic_vs_analytic(&cases, focusing_elapsed)),
        ),
        ("kinetic vs CGO intensity", guarded(|| kinetic_vs_cgo(&cases))),
        ("split-step oracle", guarded(|| splitstep_oracle(&cases))),
        ("focusing maps", guarded(|| focusing_maps(&cases))),
        ("ray invariants", guarded(ray_properties)),
        ("Wigner transform", guarded(wigner_suite)),
        ("moment machinery", guarded(moment_machinery)),
        ("CGO residual asymptotics", guarded(cgo_asymptotics)),
        ("determinism", guarded(determinism)),
    ];
    let mut failed = 0;
    for (n, (name, o)) in results.iter().enumerate() {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} [{:>2}] {name}: {}", n + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
