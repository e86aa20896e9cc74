//! Scenario configuration: flat `key = value` lines grouped under
//! `[section]` headers. `#` starts a comment. Unknown sections or keys are
//! rejected with their line number.
//!
//! Lengths are given relative to the launch width `w0` and the medium
//! length `L`, which is derived from the ratio `L/zR`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use semiclass::symbols::BUILTIN_SYMBOLS;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Intensity maps of the focusing beam for each launch offset.
    Focusing,
    /// Beam width along `z` from every method.
    Widths,
    /// Ray dumps of the full symbol.
    Rays,
    /// Moment-series truncation error against quadrature.
    Moments,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Focusing => "focusing",
            Self::Widths => "widths",
            Self::Rays => "rays",
            Self::Moments => "moments",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgoMethod {
    ClosedForm,
    Ode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Vacuum wavenumber `k0`.
    pub k0: f64,
    /// `L/zR`.
    pub ratio: f64,
    pub n0: f64,
    /// Kinetic symbol, by registry name.
    pub symbol: String,
    pub w0: f64,
    pub u0: f64,
    /// Launch offsets in units of `w0`.
    pub offsets: Vec<f64>,
    pub nx: usize,
    pub nk: usize,
    /// Half-width of the `x` window in units of `w0`.
    pub x_half_width: f64,
    /// Half-width of the `k` window in units of `1/w0`.
    pub k_half_width: f64,
    pub stations: usize,
    /// `z` span in units of `πL`.
    pub z_span: f64,
    /// Launch-field samples per `w0` and sample count for the Wigner transform.
    pub boundary_cells_per_w0: usize,
    pub boundary_n: usize,
    pub padding: usize,
    pub kinetic: bool,
    pub cgo: bool,
    pub cgo_method: CgoMethod,
    pub splitstep: bool,
    /// Agreement between successive step halvings of the split-step run.
    pub splitstep_tol: f64,
    /// Largest characteristic step in units of `L`.
    pub ray_step: f64,
    pub rays: usize,
    pub moment_order: u32,
    /// `σ/k0` of the momentum density for the moments scenario.
    pub moment_spread: f64,
    pub tol_kinetic: f64,
    pub tol_equivalence: f64,
    pub tol_splitstep: f64,
    pub output: PathBuf,
    pub heatmaps: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Focusing,
            k0: 400.0,
            ratio: 0.5,
            n0: 1.0,
            symbol: "paraxial_oscillator".into(),
            w0: 0.1,
            u0: 1.0,
            offsets: vec![0.0, 0.5],
            nx: 256,
            nk: 256,
            x_half_width: 4.0,
            k_half_width: 16.0,
            stations: 64,
            z_span: 2.0,
            boundary_cells_per_w0: 32,
            boundary_n: 512,
            padding: 2,
            kinetic: true,
            cgo: true,
            cgo_method: CgoMethod::ClosedForm,
            splitstep: true,
            splitstep_tol: 1e-7,
            ray_step: 1.0 / 200.0,
            rays: 16,
            moment_order: 4,
            moment_spread: 0.1,
            tol_kinetic: 0.01,
            tol_equivalence: 0.01,
            tol_splitstep: 1e-6,
            output: PathBuf::from("out"),
            heatmaps: true,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn length(&self) -> f64 {
        self.ratio * self.k0 * self.w0 * self.w0 / 2.0
    }

    /// Evenly spaced stations `z_n = n·span·πL/count`.
    pub fn station_positions(&self) -> Vec<f64> {
        let dz = self.z_span * std::f64::consts::PI * self.length() / self.stations as f64;
        (0..self.stations).map(|n| n as f64 * dz).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section = String::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| bad(line, "", "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(bad(line, name, "unknown section"));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| bad(line, "", "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(bad(line, key, "key outside of a section"));
            }
            let full = format!("{section}.{key}");
            if let Some(first) = seen.insert(full.clone(), line) {
                return Err(bad(line, &full, &format!("duplicate key (first on line {first})")));
            }
            cfg.assign(&full, value).map_err(|m| bad(line, &full, &m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn assign(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "scenario.name" => {
                self.scenario = match v {
                    "focusing" => ScenarioKind::Focusing,
                    "widths" => ScenarioKind::Widths,
                    "rays" => ScenarioKind::Rays,
                    "moments" => ScenarioKind::Moments,
                    _ => return Err(format!("unknown scenario {v:?}")),
                }
            }
            "medium.k0" => self.k0 = positive(v)?,
            "medium.ratio" => self.ratio = positive(v)?,
            "medium.n0" => self.n0 = positive(v)?,
            "medium.symbol" => {
                if !BUILTIN_SYMBOLS.contains(&v) {
                    return Err(format!("unknown symbol {v:?}, expected one of {BUILTIN_SYMBOLS:?}"));
                }
                self.symbol = v.to_string();
            }
            "launch.w0" => self.w0 = positive(v)?,
            "launch.u0" => self.u0 = positive(v)?,
            "launch.profile" => {
                if v != "gaussian" {
                    return Err(format!("unsupported profile {v:?}, only `gaussian`"));
                }
            }
            "launch.offsets" => {
                self.offsets = v.split(',').map(|s| finite(s.trim())).collect::<Result<_, _>>()?;
                if self.offsets.is_empty() {
                    return Err("at least one offset".into());
                }
            }
            "grid.nx" => self.nx = power_of_two(v)?,
            "grid.nk" => self.nk = power_of_two(v)?,
            "grid.x_half_width" => self.x_half_width = positive(v)?,
            "grid.k_half_width" => self.k_half_width = positive(v)?,
            "grid.stations" => self.stations = count(v)?,
            "grid.z_span" => self.z_span = positive(v)?,
            "grid.boundary_cells_per_w0" => self.boundary_cells_per_w0 = count(v)?,
            "grid.boundary_n" => self.boundary_n = power_of_two(v)?,
            "grid.padding" => self.padding = count(v)?,
            "method.kinetic" => self.kinetic = boolean(v)?,
            "method.cgo" => self.cgo = boolean(v)?,
            "method.cgo_propagation" => {
                self.cgo_method = match v {
                    "closed" => CgoMethod::ClosedForm,
                    "ode" => CgoMethod::Ode,
                    _ => return Err(format!("expected `closed` or `ode`, got {v:?}")),
                }
            }
            "method.splitstep" => self.splitstep = boolean(v)?,
            "method.splitstep_tol" => self.splitstep_tol = positive(v)?,
            "method.ray_step" => self.ray_step = positive(v)?,
            "method.rays" => self.rays = count(v)?,
            "moments.order" => {
                self.moment_order = v.parse().map_err(|_| format!("not an order: {v:?}"))?;
                if self.moment_order > 12 {
                    return Err("moment order above 12".into());
                }
            }
            "moments.spread" => self.moment_spread = positive(v)?,
            "check.kinetic_linf" => self.tol_kinetic = positive(v)?,
            "check.equivalence_l2" => self.tol_equivalence = positive(v)?,
            "check.splitstep_l2" => self.tol_splitstep = positive(v)?,
            "output.dir" => {
                if v.is_empty() {
                    return Err("empty path".into());
                }
                self.output = PathBuf::from(v);
            }
            "output.heatmaps" => self.heatmaps = boolean(v)?,
            "run.seed" => self.seed = v.parse().map_err(|_| format!("not a seed: {v:?}"))?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.stations < 2 {
            return Err(bad(0, "grid.stations", "need at least two stations"));
        }
        if self.boundary_n < 16 || self.boundary_cells_per_w0 < 8 {
            return Err(bad(0, "grid.boundary_n", "launch field under-resolved"));
        }
        if self.nx.saturating_mul(self.nk) > 1 << 22 {
            return Err(bad(0, "grid.nx", "phase-space grid larger than 2^22 nodes"));
        }
        if self.boundary_n.saturating_mul(self.padding) > 1 << 16 {
            return Err(bad(0, "grid.padding", "Wigner transform larger than 2^16 separations"));
        }
        Ok(())
    }
}

const SECTIONS: &[&str] = &[
    "scenario", "medium", "launch", "grid", "method", "moments", "check", "output", "run",
];

fn bad(line: usize, key: &str, message: &str) -> ConfigError {
    ConfigError {
        line,
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn finite(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("not a finite number: {v:?}")),
    }
}

fn positive(v: &str) -> Result<f64, String> {
    let x = finite(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {x}"))
    }
}

fn count(v: &str) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(_) => Err(format!("not a count: {v:?}")),
    }
}

fn power_of_two(v: &str) -> Result<usize, String> {
    let n = count(v)?;
    if n.is_power_of_two() {
        Ok(n)
    } else {
        Err(format!("{n} is not a power of two"))
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("not a boolean: {v:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty() {
        assert_eq!(ScenarioConfig::parse("# nothing\n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn sections_and_values() {
        let cfg = ScenarioConfig::parse(
            "[scenario]\nname = widths\n[medium]\nratio = 2 # matched\n[launch]\noffsets = 0, 0.25\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Widths);
        assert_eq!(cfg.ratio, 2.0);
        assert_eq!(cfg.offsets, vec![0.0, 0.25]);
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let e = ScenarioConfig::parse("[grid]\nnx = 256\nnk = 0\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (3, "grid.nk"));
        let e = ScenarioConfig::parse("[grid]\ncolour = red\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (2, "grid.colour"));
        let e = ScenarioConfig::parse("[palette]\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = ScenarioConfig::parse("[grid]\nnx = 100\n").unwrap_err();
        assert!(e.message.contains("power of two"));
        let e = ScenarioConfig::parse("[grid]\nnx =\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
