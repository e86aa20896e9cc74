//! Named scenario pipelines and their comparison metrics.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

use semiclass::cgo::{beam_path, reconstruct_field, CgoError, GaussianBeamState, Propagation};
use semiclass::interp::cubic1;
use semiclass::io::{ray_rows, write_beam_path_csv, write_grid_csv, write_moment_csv, write_ray_csv, LabeledGrid};
use semiclass::kinetic::{
    project_bundle, solve_dispersion_normal, trace_ray, AdvectOptions, Branch, FootMap, KineticError, Parametrization,
    PhaseSpacePoint, RayBundle, StepControl,
};
use semiclass::moments::{moment_series, quadrature_oracle, MomentError, MomentumDensity};
use semiclass::oracle::{second_moment_width, split_step_refined, LensLikeScenario, OracleError};
use semiclass::symbols::{
    builtin, c, lenslike_progressive, DispersionSymbol, MediumParameters, PhaseFunction, SymbolError,
};
use semiclass::wigner::{marginal_intensity, wigner_transform, Axis, SampledField, WignerError, WignerGrid};

use crate::config::{CgoMethod, ScenarioConfig, ScenarioKind};
use crate::heatmap::{write_heatmap, xz_image};
use crate::summary::Summary;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Cgo(#[from] CgoError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A scalar comparison against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
        }
    }

    pub fn pass(&self) -> bool {
        self.value <= self.threshold
    }
}

/// Intensities of one launch, indexed `[x, station]`.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub scenario: LensLikeScenario,
    pub x: Axis,
    pub stations: Vec<f64>,
    pub analytic: Array2<f64>,
    pub kinetic: Option<Array2<f64>>,
    pub cgo: Option<Array2<f64>>,
    pub splitstep: Option<Array2<f64>>,
    pub beam: Vec<GaussianBeamState>,
    pub launch_wigner: WignerGrid,
    /// Transported Wigner function at the station nearest the first focus.
    pub focus_wigner: Option<(usize, WignerGrid)>,
    pub missed_feet: usize,
}

pub fn medium(cfg: &ScenarioConfig) -> Result<MediumParameters, PipelineError> {
    Ok(MediumParameters::new(cfg.k0, cfg.length(), cfg.n0)?)
}

pub fn phase_axes(cfg: &ScenarioConfig) -> (Axis, Axis) {
    let x = Axis::spanning(-cfg.x_half_width * cfg.w0, cfg.x_half_width * cfg.w0, cfg.nx);
    let k = Axis::spanning(-cfg.k_half_width / cfg.w0, cfg.k_half_width / cfg.w0, cfg.nk);
    (x, k)
}

/// Fine launch-plane axis used for the Wigner transform and the split-step
/// reference.
pub fn boundary_axis(cfg: &ScenarioConfig) -> Axis {
    Axis::centered(cfg.w0 / cfg.boundary_cells_per_w0 as f64, cfg.boundary_n)
}

fn columns(values: &[Vec<f64>]) -> Array2<f64> {
    let nz = values.len();
    let nx = values.first().map_or(0, Vec::len);
    Array2::from_shape_fn((nx, nz), |(i, j)| values[j][i])
}

/// Runs every enabled method for each configured launch offset. The
/// characteristic foot map is shared between offsets.
pub fn focusing_cases(cfg: &ScenarioConfig) -> Result<Vec<CaseResult>, PipelineError> {
    let m = medium(cfg)?;
    let (x, k) = phase_axes(cfg);
    let stations = cfg.station_positions();
    let l = m.length;
    let foot_map = if cfg.kinetic {
        let d = builtin(&cfg.symbol, &m)?;
        let opts = AdvectOptions {
            max_step: cfg.ray_step * l,
            branch: Branch::Progressive,
        };
        Some(FootMap::compute(&d, x, k, &stations, &opts)?)
    } else {
        None
    };
    let focus = stations
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - PI * l / 2.0).abs().total_cmp(&(b.1 - PI * l / 2.0).abs()))
        .map_or(0, |(j, _)| j);
    let bx = boundary_axis(cfg);
    let mut out = Vec::new();
    for &offset in &cfg.offsets {
        let s = LensLikeScenario::new(m, cfg.w0, offset * cfg.w0, cfg.u0)?;
        let launch = s.launch_field(bx)?;
        let launch_wigner = wigner_transform(&launch, cfg.padding)?.resample(x, k);
        let analytic = Array2::from_shape_fn((x.n, stations.len()), |(i, j)| {
            s.analytic_intensity(x.coord(i), stations[j])
        });
        let (kinetic, focus_wigner, missed_feet) = match &foot_map {
            Some(map) => {
                let adv = map.apply(&launch_wigner)?;
                let cols: Vec<Vec<f64>> = adv.grids.iter().map(marginal_intensity).collect();
                let fw = adv.grids[focus].clone();
                (Some(columns(&cols)), Some((focus, fw)), adv.missed_feet)
            }
            None => (None, None, 0),
        };
        let method = match cfg.cgo_method {
            CgoMethod::ClosedForm => Propagation::ClosedForm,
            CgoMethod::Ode => Propagation::Ode {
                max_step: cfg.ray_step * l,
            },
        };
        let beam = beam_path(&m, &s.launch_state(), &stations, method)?.states;
        let cgo = if cfg.cgo {
            Some(reconstruct_field(m.k0, &beam, x)?.intensity())
        } else {
            None
        };
        let splitstep = if cfg.splitstep {
            let (fields, _) = split_step_refined(&launch, &m, &stations, cfg.splitstep_tol, 8)?;
            let cols: Vec<Vec<f64>> = fields.iter().map(|f| resample_intensity(f, x)).collect();
            Some(columns(&cols))
        } else {
            None
        };
        out.push(CaseResult {
            scenario: s,
            x,
            stations: stations.clone(),
            analytic,
            kinetic,
            cgo,
            splitstep,
            beam,
            launch_wigner,
            focus_wigner,
            missed_feet,
        });
    }
    Ok(out)
}

fn resample_intensity(f: &SampledField, x: Axis) -> Vec<f64> {
    let src = f.axes()[0];
    let p: Vec<f64> = f.samples().iter().map(|v| v.norm_sqr()).collect();
    x.coords()
        .iter()
        .map(|&xi| cubic1(&p, src.position(xi)).unwrap_or(0.0))
        .collect()
}

/// Largest per-station `max|a − b| / max|b|`.
pub fn linf_relative(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    per_station(a, b, |d, r| {
        let err = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let peak = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        err / peak
    })
}

/// Largest per-station `‖a − b‖₂ / ‖b‖₂`.
pub fn l2_relative(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    per_station(a, b, |d, r| {
        let err: f64 = d.iter().map(|v| v * v).sum();
        let norm: f64 = r.iter().map(|v| v * v).sum();
        (err / norm).sqrt()
    })
}

fn per_station(a: &Array2<f64>, b: &Array2<f64>, f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    assert_eq!(a.dim(), b.dim(), "grids differ in shape");
    (0..a.ncols())
        .map(|j| {
            let d: Vec<f64> = a.column(j).iter().zip(b.column(j)).map(|(p, q)| p - q).collect();
            let r: Vec<f64> = b.column(j).to_vec();
            f(&d, &r)
        })
        .fold(0.0, f64::max)
}

/// Station indices where the peak intensity over `x` has a strict local
/// maximum.
pub fn focal_stations(values: &Array2<f64>) -> Vec<usize> {
    let peak: Vec<f64> = values
        .columns()
        .into_iter()
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    (1..peak.len().saturating_sub(1))
        .filter(|&j| peak[j] > peak[j - 1] && peak[j] > peak[j + 1])
        .collect()
}

/// Expected focal planes `(n + ½)πL` inside the station range, as
/// fractional station indices.
pub fn expected_foci(stations: &[f64], length: f64) -> Vec<f64> {
    let dz = stations[1] - stations[0];
    let last = *stations.last().unwrap_or(&0.0);
    (0..)
        .map(|n| (n as f64 + 0.5) * PI * length)
        .take_while(|z| *z <= last)
        .map(|z| (z - stations[0]) / dz)
        .collect()
}

/// Largest distance, in `z` cells, between an expected focus and the
/// nearest detected one; infinite when the counts differ.
pub fn focus_error_cells(values: &Array2<f64>, stations: &[f64], length: f64) -> f64 {
    let found = focal_stations(values);
    let expected = expected_foci(stations, length);
    if found.len() != expected.len() {
        return f64::INFINITY;
    }
    expected
        .iter()
        .zip(&found)
        .map(|(e, f)| (e - *f as f64).abs())
        .fold(0.0, f64::max)
}

/// Largest distance, in `x` cells, between the per-station intensity
/// maximum and the centre `x0 cos(z/L)`.
pub fn center_trace_error_cells(case: &CaseResult, values: &Array2<f64>) -> f64 {
    values
        .columns()
        .into_iter()
        .zip(&case.stations)
        .map(|(col, &z)| {
            let imax = col
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                .0;
            (case.x.coord(imax) - case.scenario.analytic_center(z)).abs() / case.x.step
        })
        .fold(0.0, f64::max)
}

/// Widths by second moment of each intensity column.
pub fn column_widths(values: &Array2<f64>, x: Axis) -> Result<Vec<f64>, PipelineError> {
    values
        .columns()
        .into_iter()
        .map(|col| {
            let f = SampledField::new_1d(
                x,
                col.iter()
                    .map(|v| num_complex::Complex64::new(v.max(0.0).sqrt(), 0.0))
                    .collect(),
            )?;
            Ok(second_moment_width(&f)?.1)
        })
        .collect()
}

/// Comparison metrics of the focusing cases against the configured
/// tolerances.
pub fn focusing_metrics(cfg: &ScenarioConfig, cases: &[CaseResult]) -> Vec<Metric> {
    let mut out = Vec::new();
    for (n, case) in cases.iter().enumerate() {
        let tag = format!("case{n}");
        if let Some(k) = &case.kinetic {
            out.push(Metric::new(
                format!("{tag}.kinetic_vs_analytic_linf"),
                linf_relative(k, &case.analytic),
                cfg.tol_kinetic,
            ));
            out.push(Metric::new(
                format!("{tag}.focus_error_cells"),
                focus_error_cells(k, &case.stations, case.scenario.medium.length),
                1.0,
            ));
            out.push(Metric::new(
                format!("{tag}.center_trace_error_cells"),
                center_trace_error_cells(case, k),
                1.0,
            ));
            if let Some(c) = &case.cgo {
                out.push(Metric::new(
                    format!("{tag}.kinetic_vs_cgo_l2"),
                    l2_relative(k, c),
                    cfg.tol_equivalence,
                ));
            }
        }
        if let Some(s) = &case.splitstep {
            out.push(Metric::new(
                format!("{tag}.splitstep_vs_analytic_l2"),
                l2_relative(s, &case.analytic),
                cfg.tol_splitstep,
            ));
        }
    }
    out
}

/// Rows `(z, w_kinetic, w_cgo, w_analytic, w_splitstep)` for the first
/// configured launch; disabled methods give NaN.
pub fn width_rows(case: &CaseResult) -> Result<Vec<[f64; 5]>, PipelineError> {
    let nan = vec![f64::NAN; case.stations.len()];
    let kin = match &case.kinetic {
        Some(k) => column_widths(k, case.x)?,
        None => nan.clone(),
    };
    let ss = match &case.splitstep {
        Some(s) => column_widths(s, case.x)?,
        None => nan,
    };
    Ok(case
        .stations
        .iter()
        .enumerate()
        .map(|(j, &z)| [z, kin[j], case.beam[j].w, case.scenario.analytic_width(z), ss[j]])
        .collect())
}

pub fn width_csv(rows: &[[f64; 5]]) -> String {
    let mut out = String::from("z,w_kinetic,w_cgo,w_analytic,w_splitstep\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Deterministic rays of the configured symbol launched parallel to the
/// axis across the beam, parametrized by `z`.
pub fn trace_launch_rays(
    cfg: &ScenarioConfig,
    d: &DispersionSymbol,
) -> Result<Vec<semiclass::kinetic::Ray>, PipelineError> {
    let l = cfg.length();
    let span = cfg.z_span * PI * l;
    let n = cfg.rays.max(1);
    let control = StepControl {
        step: cfg.ray_step * l,
        adaptive: false,
        tolerance: 1e-9,
        max_steps: usize::MAX,
    };
    (0..n)
        .map(|r| {
            let x0 = if n == 1 {
                0.0
            } else {
                (-2.0 + 4.0 * r as f64 / (n - 1) as f64) * cfg.w0
            };
            let kz = solve_dispersion_normal(d, &[x0, 0.0], &[0.0], Branch::Progressive)?;
            let p0 = PhaseSpacePoint::new(vec![x0, 0.0], vec![0.0, kz]);
            Ok(trace_ray(
                d,
                &p0,
                (0.0, span),
                Parametrization::Coordinate(1),
                &control,
                Branch::Progressive,
            )?)
        })
        .collect()
}

/// `(order, series, quadrature, |error|)` for the progressive lens-like
/// symbol against a Gaussian momentum spread `σ = spread·k0`, at the axis.
pub fn moment_truncation(
    cfg: &ScenarioConfig,
) -> Result<(Vec<[f64; 4]>, semiclass::moments::MomentTable), PipelineError> {
    let m = medium(cfg)?;
    let d = lenslike_progressive(&m);
    let one = DispersionSymbol::lossless("one", 0, PhaseFunction::from_expr(2, c(1.0))?, m.scales());
    let sigma = cfg.moment_spread * cfg.k0;
    let density = MomentumDensity::gaussian(2, sigma, 8.0, 161)?;
    let table = density.moments(cfg.moment_order);
    let (x, kc) = ([0.0, 0.0], [0.0, cfg.k0]);
    let exact = quadrature_oracle(&density, &d, &one, &x, &kc)?;
    let rows = (0..=cfg.moment_order)
        .step_by(2)
        .map(|order| {
            let s = moment_series(&d, &one, &table, &x, &kc, order)?;
            Ok([order as f64, s.value, exact, (s.value - exact).abs()])
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok((rows, table))
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn heatmap(dir: &Path, name: &str, values: &Array2<f64>) -> Result<(), PipelineError> {
    let path = dir.join(name);
    write_heatmap(&xz_image(values), &path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn xz_grid(case: &CaseResult, values: &Array2<f64>) -> String {
    let z = Axis::new(
        case.stations[0],
        case.stations[1] - case.stations[0],
        case.stations.len(),
    );
    write_grid_csv(&LabeledGrid::new(["x", "z"], [case.x, z], values.clone()))
}

/// Everything a run computed: artifacts are written by [`write_artifacts`].
#[derive(Debug)]
pub struct RunOutput {
    pub summary: Summary,
    pub metrics: Vec<Metric>,
    cases: Vec<CaseResult>,
    extra: Vec<(String, String)>,
}

impl RunOutput {
    pub fn cases(&self) -> &[CaseResult] {
        &self.cases
    }

    pub fn all_pass(&self) -> bool {
        self.metrics.iter().all(Metric::pass)
    }
}

/// Executes the configured scenario.
pub fn execute(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput, PipelineError> {
    let mut summary = Summary::default();
    summary.text("scenario", cfg.scenario.name());
    summary.number("k0", cfg.k0);
    summary.number("L", cfg.length());
    summary.number("L_over_zR", cfg.ratio);
    summary.number("w0", cfg.w0);
    summary.count("seed", seed as usize);
    let mut metrics = Vec::new();
    let mut cases = Vec::new();
    let mut extra = Vec::new();
    match cfg.scenario {
        ScenarioKind::Focusing | ScenarioKind::Widths => {
            cases = focusing_cases(cfg)?;
            metrics = focusing_metrics(cfg, &cases);
            if cfg.scenario == ScenarioKind::Widths {
                let rows = width_rows(&cases[0])?;
                let worst = rows.iter().map(|r| (r[2] / r[3] - 1.0).abs()).fold(0.0, f64::max);
                metrics.push(Metric::new("case0.cgo_width_rel", worst, 1e-6));
                extra.push(("widths.csv".into(), width_csv(&rows)));
            }
            for (n, case) in cases.iter().enumerate() {
                summary.number(format!("case{n}.x0"), case.scenario.x0);
                summary.count(format!("case{n}.missed_feet"), case.missed_feet);
            }
        }
        ScenarioKind::Rays => {
            let m = medium(cfg)?;
            let d = builtin(&cfg.symbol, &m)?;
            let rays = trace_launch_rays(cfg, &d)?;
            let mut drift = 0.0f64;
            let mut kz_drift = 0.0f64;
            let mut weight_drift = 0.0f64;
            for (r, ray) in rays.iter().enumerate() {
                drift = drift.max(ray.dispersion_residual / d.scale().abs());
                let kz0 = ray.samples[0].point.k[1];
                for s in &ray.samples {
                    if !d.real.depends_on_x(1) {
                        kz_drift = kz_drift.max((s.point.k[1] - kz0).abs() / cfg.k0);
                    }
                    weight_drift = weight_drift.max((s.weight - 1.0).abs());
                }
                extra.push((format!("ray_{r:03}.csv"), write_ray_csv(2, &ray_rows(ray, &d))));
            }
            metrics.push(Metric::new("rays.dispersion_drift", drift, 1e-9));
            metrics.push(Metric::new("rays.kz_drift", kz_drift, 1e-9));
            metrics.push(Metric::new("rays.weight_drift", weight_drift, 0.0));
            let (x, k) = phase_axes(cfg);
            let s = LensLikeScenario::new(m, cfg.w0, cfg.offsets[0] * cfg.w0, cfg.u0)?;
            let w0 = wigner_transform(&s.launch_field(boundary_axis(cfg))?, cfg.padding)?.resample(x, k);
            let stations = cfg.station_positions();
            let opts = AdvectOptions {
                max_step: cfg.ray_step * cfg.length(),
                branch: Branch::Progressive,
            };
            let bundle = RayBundle::sample_wigner(&d, &w0, &stations, &opts, 1.0, 64 * cfg.rays.max(1), seed)?;
            let cols: Vec<Vec<f64>> = (0..stations.len()).map(|j| project_bundle(&bundle, j, x)).collect();
            let z = Axis::new(0.0, stations[1] - stations[0], stations.len());
            extra.push((
                "bundle_intensity.csv".into(),
                write_grid_csv(&LabeledGrid::new(["x", "z"], [x, z], columns(&cols))),
            ));
            summary.count("bundle.rays", bundle.rays.len());
        }
        ScenarioKind::Moments => {
            let (rows, table) = moment_truncation(cfg)?;
            let mut csv = String::from("order,series,quadrature,error\n");
            for r in &rows {
                let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
                csv.push_str(&cells.join(","));
                csv.push('\n');
            }
            for w in rows.windows(2) {
                summary.number(format!("moments.ratio_{}_{}", w[1][0], w[0][0]), w[1][3] / w[0][3]);
            }
            extra.push(("moment_truncation.csv".into(), csv));
            extra.push(("moments.csv".into(), write_moment_csv(&table)));
        }
    }
    for m in &metrics {
        summary.number(m.name.clone(), m.value);
        summary.flag(format!("{}.status", m.name), m.pass());
    }
    summary.flag("all", metrics.iter().all(Metric::pass));
    Ok(RunOutput {
        summary,
        metrics,
        cases,
        extra,
    })
}

/// Writes the data files, heatmaps and `summary.txt` of a run into `dir`.
pub fn write_artifacts(cfg: &ScenarioConfig, run: &RunOutput, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (n, case) in run.cases.iter().enumerate() {
        write(dir, &format!("case{n}_beam_path.csv"), write_beam_path_csv(&case.beam))?;
        write(
            dir,
            &format!("case{n}_intensity_analytic.csv"),
            xz_grid(case, &case.analytic),
        )?;
        write(
            dir,
            &format!("case{n}_wigner_launch.csv"),
            write_grid_csv(&LabeledGrid::from_wigner(&case.launch_wigner)),
        )?;
        let methods = [
            ("kinetic", &case.kinetic),
            ("cgo", &case.cgo),
            ("splitstep", &case.splitstep),
        ];
        for (name, values) in methods {
            if let Some(v) = values {
                write(dir, &format!("case{n}_intensity_{name}.csv"), xz_grid(case, v))?;
                if cfg.heatmaps {
                    heatmap(dir, &format!("case{n}_{name}.pgm"), v)?;
                }
            }
        }
        if let Some((j, w)) = &case.focus_wigner {
            write(
                dir,
                &format!("case{n}_wigner_station{j:03}.csv"),
                write_grid_csv(&LabeledGrid::from_wigner(w)),
            )?;
        }
    }
    for (name, contents) in &run.extra {
        write(dir, name, contents)?;
    }
    write(dir, "summary.txt", run.summary.render())
}
