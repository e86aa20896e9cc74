//! Plain-text serialization of grids, beam paths, ray dumps and moment
//! tables. Floats are written with 17 significant digits, so a write/parse
//! round trip is exact.
//!
//! Grid format: two header lines `# axis <name>: origin,step,n`, then one
//! comma-separated row per index of the first axis.

use std::fmt::Write as _;

use ndarray::Array2;
use thiserror::Error;

use crate::cgo::GaussianBeamState;
use crate::kinetic::Ray;
use crate::moments::MomentTable;
use crate::multi_index::MultiIndex;
use crate::symbols::DispersionSymbol;
use crate::wigner::{Axis, WignerGrid};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(line: usize, s: &str) -> Result<f64, ParseError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| err(line, format!("not a number: {:?}", s.trim())))
}

/// Non-empty lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// A real 2D array on two named uniform axes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGrid {
    pub names: [String; 2],
    pub axes: [Axis; 2],
    pub values: Array2<f64>,
}

impl LabeledGrid {
    pub fn new(names: [&str; 2], axes: [Axis; 2], values: Array2<f64>) -> Self {
        Self {
            names: names.map(String::from),
            axes,
            values,
        }
    }

    pub fn from_wigner(w: &WignerGrid) -> Self {
        Self::new(["x", "k"], [w.x_axis(), w.k_axis()], w.values().clone())
    }

    pub fn into_wigner(self) -> Result<WignerGrid, crate::wigner::WignerError> {
        WignerGrid::new(self.axes[0], self.axes[1], self.values)
    }
}

pub fn write_grid_csv(g: &LabeledGrid) -> String {
    let mut out = String::new();
    for (name, a) in g.names.iter().zip(&g.axes) {
        let _ = writeln!(out, "# axis {name}: {},{},{}", num(a.origin), num(a.step), a.n);
    }
    for row in g.values.rows() {
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_grid_csv(text: &str) -> Result<LabeledGrid, ParseError> {
    let mut it = lines(text);
    let mut header = |which: usize| -> Result<(String, Axis), ParseError> {
        let (ln, l) = it.next().ok_or_else(|| err(which + 1, "missing axis header"))?;
        let rest = l
            .strip_prefix("# axis ")
            .ok_or_else(|| err(ln, "expected '# axis <name>: origin,step,n'"))?;
        let (name, spec) = rest
            .split_once(':')
            .ok_or_else(|| err(ln, "missing ':' in axis header"))?;
        let parts: Vec<&str> = spec.split(',').collect();
        if parts.len() != 3 {
            return Err(err(ln, "axis header needs origin,step,n"));
        }
        let origin = parse_f64(ln, parts[0])?;
        let step = parse_f64(ln, parts[1])?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| err(ln, format!("bad count {:?}", parts[2].trim())))?;
        if n == 0 || !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(err(ln, "axis needs n > 0 and a finite positive step"));
        }
        Ok((name.trim().to_string(), Axis::new(origin, step, n)))
    };
    let (n0, a0) = header(0)?;
    let (n1, a1) = header(1)?;
    if a0.n.checked_mul(a1.n).is_none_or(|t| t > 1 << 28) {
        return Err(err(2, "grid too large"));
    }
    let mut values = Array2::zeros((a0.n, a1.n));
    let mut rows = 0;
    for (ln, l) in it {
        if rows == a0.n {
            return Err(err(ln, format!("more than {} rows", a0.n)));
        }
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != a1.n {
            return Err(err(ln, format!("expected {} values, found {}", a1.n, cells.len())));
        }
        for (j, c) in cells.iter().enumerate() {
            values[[rows, j]] = parse_f64(ln, c)?;
        }
        rows += 1;
    }
    if rows != a0.n {
        return Err(err(
            text.lines().count(),
            format!("expected {} rows, found {rows}", a0.n),
        ));
    }
    Ok(LabeledGrid {
        names: [n0, n1],
        axes: [a0, a1],
        values,
    })
}

pub const BEAM_PATH_HEADER: &str = "z,xc,theta,w,R_inv,amp2";

pub fn write_beam_path_csv(states: &[GaussianBeamState]) -> String {
    let mut out = format!("{BEAM_PATH_HEADER}\n");
    for s in states {
        let row = [s.z, s.xc, s.theta, s.w, s.r_inv, s.amp2].map(num);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One beam-path row; the phases are not part of the format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPathRow {
    pub z: f64,
    pub xc: f64,
    pub theta: f64,
    pub w: f64,
    pub r_inv: f64,
    pub amp2: f64,
}

pub fn parse_beam_path_csv(text: &str) -> Result<Vec<BeamPathRow>, ParseError> {
    let mut it = lines(text);
    match it.next() {
        Some((_, h)) if h == BEAM_PATH_HEADER => {}
        Some((ln, _)) => return Err(err(ln, format!("expected header {BEAM_PATH_HEADER:?}"))),
        None => return Err(err(1, "empty beam path")),
    }
    it.map(|(ln, l)| {
        let v = fixed_row::<6>(ln, l)?;
        Ok(BeamPathRow {
            z: v[0],
            xc: v[1],
            theta: v[2],
            w: v[3],
            r_inv: v[4],
            amp2: v[5],
        })
    })
    .collect()
}

fn fixed_row<const N: usize>(ln: usize, l: &str) -> Result<[f64; N], ParseError> {
    let cells: Vec<&str> = l.split(',').collect();
    if cells.len() != N {
        return Err(err(ln, format!("expected {N} values, found {}", cells.len())));
    }
    let mut out = [0.0; N];
    for (o, c) in out.iter_mut().zip(cells) {
        *o = parse_f64(ln, c)?;
    }
    Ok(out)
}

/// One row of a ray dump.
#[derive(Debug, Clone, PartialEq)]
pub struct RayRow {
    pub param: f64,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub weight: f64,
    /// `D′` at the sample.
    pub residual: f64,
}

/// Rows of a traced ray with the sampled `D′`.
pub fn ray_rows(ray: &Ray, d: &DispersionSymbol) -> Vec<RayRow> {
    ray.samples
        .iter()
        .map(|s| RayRow {
            param: s.param,
            x: s.point.x.clone(),
            k: s.point.k.clone(),
            weight: s.weight,
            residual: d.real.value(&s.point.x, &s.point.k),
        })
        .collect()
}

fn ray_header(dim: usize) -> String {
    let mut cols = vec!["param".to_string()];
    cols.extend((0..dim).map(|i| format!("x{i}")));
    cols.extend((0..dim).map(|i| format!("k{i}")));
    cols.push("weight".into());
    cols.push("residual".into());
    cols.join(",")
}

pub fn write_ray_csv(dim: usize, rows: &[RayRow]) -> String {
    let mut out = ray_header(dim);
    out.push('\n');
    for r in rows {
        let mut cells = vec![num(r.param)];
        cells.extend(r.x.iter().chain(&r.k).map(|v| num(*v)));
        cells.push(num(r.weight));
        cells.push(num(r.residual));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_ray_csv(text: &str) -> Result<Vec<RayRow>, ParseError> {
    let mut it = lines(text);
    let (ln, h) = it.next().ok_or_else(|| err(1, "empty ray dump"))?;
    let ncols = h.split(',').count();
    if ncols < 5 || (ncols - 3) % 2 != 0 {
        return Err(err(ln, "ray header needs param, x…, k…, weight, residual"));
    }
    let dim = (ncols - 3) / 2;
    if h != ray_header(dim) {
        return Err(err(ln, format!("expected header {:?}", ray_header(dim))));
    }
    it.map(|(ln, l)| {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != ncols {
            return Err(err(ln, format!("expected {ncols} values, found {}", cells.len())));
        }
        let v = cells.iter().map(|c| parse_f64(ln, c)).collect::<Result<Vec<_>, _>>()?;
        Ok(RayRow {
            param: v[0],
            x: v[1..=dim].to_vec(),
            k: v[dim + 1..=2 * dim].to_vec(),
            weight: v[2 * dim + 1],
            residual: v[2 * dim + 2],
        })
    })
    .collect()
}

pub fn write_moment_csv(t: &MomentTable) -> String {
    let mut cols: Vec<String> = (0..t.dim()).map(|i| format!("a{i}")).collect();
    cols.push("K".into());
    let mut out = cols.join(",");
    out.push('\n');
    let mut entries: Vec<_> = t.iter().collect();
    entries.sort_by(|a, b| (a.0.order(), a.0.components()).cmp(&(b.0.order(), b.0.components())));
    for (alpha, v) in entries {
        let mut cells: Vec<String> = alpha.components().iter().map(|a| a.to_string()).collect();
        cells.push(num(*v));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Maximum multi-index order accepted by the moment parser.
pub const MAX_MOMENT_ORDER: u32 = 64;

pub fn parse_moment_csv(text: &str) -> Result<MomentTable, ParseError> {
    let mut it = lines(text);
    let (ln, h) = it.next().ok_or_else(|| err(1, "empty moment table"))?;
    let cols: Vec<&str> = h.split(',').map(str::trim).collect();
    let dim = cols.len().saturating_sub(1);
    let expected: Vec<String> = (0..dim).map(|i| format!("a{i}")).chain(["K".to_string()]).collect();
    if dim == 0 || cols != expected {
        return Err(err(ln, "moment header must be a0,…,a{N-1},K"));
    }
    let mut rows = Vec::new();
    let mut max_order = 0;
    for (ln, l) in it {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != dim + 1 {
            return Err(err(ln, format!("expected {} values, found {}", dim + 1, cells.len())));
        }
        let alpha = cells[..dim]
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<u32>()
                    .map_err(|_| err(ln, format!("bad multi-index component {:?}", c.trim())))
            })
            .collect::<Result<Vec<u32>, _>>()?;
        let order = alpha.iter().try_fold(0u32, |a, &b| a.checked_add(b));
        match order {
            Some(o) if o <= MAX_MOMENT_ORDER => max_order = max_order.max(o),
            _ => return Err(err(ln, format!("multi-index order exceeds {MAX_MOMENT_ORDER}"))),
        }
        rows.push((MultiIndex::from(alpha), parse_f64(ln, cells[dim])?));
    }
    let mut t = MomentTable::new(dim, max_order);
    for (alpha, v) in rows {
        t.set(alpha, v);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_is_exact() {
        let x = Axis::new(-0.3, 0.1, 3);
        let k = Axis::new(-1.0 / 3.0, 2.0f64.sqrt(), 2);
        let values = Array2::from_shape_fn((3, 2), |(i, j)| (i as f64 + 0.1).powf(j as f64 + 0.7) / 7.0);
        let g = LabeledGrid::new(["x", "k"], [x, k], values);
        assert_eq!(parse_grid_csv(&write_grid_csv(&g)).unwrap(), g);
    }

    #[test]
    fn grid_errors_carry_line_numbers() {
        let text = "# axis x: 0,1,2\n# axis k: 0,1,2\n1,2\n1,oops\n";
        assert_eq!(parse_grid_csv(text).unwrap_err().line, 4);
        let short = "# axis x: 0,1,2\n# axis k: 0,1,2\n1,2\n";
        assert!(parse_grid_csv(short).is_err());
    }

    #[test]
    fn moment_round_trip() {
        let mut t = MomentTable::new(2, 2);
        t.set(vec![0, 0].into(), 1.0);
        t.set(vec![2, 0].into(), -0.25);
        t.set(vec![1, 1].into(), 1e-17);
        let back = parse_moment_csv(&write_moment_csv(&t)).unwrap();
        for (a, v) in t.iter() {
            assert_eq!(back.get(a), Some(*v));
        }
    }

    #[test]
    fn ray_round_trip() {
        let rows = vec![RayRow {
            param: 0.5,
            x: vec![0.1, 0.2],
            k: vec![3.0, -4.0],
            weight: 1.0,
            residual: 1e-13,
        }];
        assert_eq!(parse_ray_csv(&write_ray_csv(2, &rows)).unwrap(), rows);
    }
}
