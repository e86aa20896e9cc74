//! 8-bit binary PGM output with a linear grey scale.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ndarray::Array2;

/// Grey levels for `grid`, row-major with row 0 at the top. The minimum maps
/// to 0 and the maximum to 255; a constant grid is mid-grey (128).
pub fn grey_levels(grid: &Array2<f64>) -> io::Result<(Vec<u8>, f64, f64)> {
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("non-finite pixel {v}"),
        ));
    }
    let min = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let bytes = grid
        .iter()
        .map(|v| {
            if span > 0.0 {
                (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8
            } else {
                128
            }
        })
        .collect();
    Ok((bytes, min, max))
}

/// Encodes `grid` as a P5 image.
pub fn encode_pgm(grid: &Array2<f64>) -> io::Result<(Vec<u8>, f64, f64)> {
    let (rows, cols) = grid.dim();
    let (pixels, min, max) = grey_levels(grid)?;
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(pixels);
    Ok((out, min, max))
}

/// Path of the value-range sidecar written next to an image.
pub fn range_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".range");
    PathBuf::from(name)
}

/// Writes the image and a `min=`/`max=` sidecar at `<path>.range`.
pub fn write_heatmap(grid: &Array2<f64>, path: &Path) -> io::Result<()> {
    let (bytes, min, max) = encode_pgm(grid)?;
    fs::write(path, bytes)?;
    fs::write(range_path(path), format!("min={min:.16e}\nmax={max:.16e}\n"))
}

/// Reorients an `[x, z]` array so that `z` runs left to right and the top
/// row is the largest `x`.
pub fn xz_image(values: &Array2<f64>) -> Array2<f64> {
    let (nx, nz) = values.dim();
    Array2::from_shape_fn((nx, nz), |(r, c)| values[[nx - 1 - r, c]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn endpoints_map_to_black_and_white() {
        let (px, min, max) = grey_levels(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(px, vec![0, 255, 255, 0]);
        assert_eq!((min, max), (0.0, 1.0));
    }

    #[test]
    fn constant_grid_is_mid_grey() {
        let (px, _, _) = grey_levels(&Array2::from_elem((3, 2), 4.5)).unwrap();
        assert!(px.iter().all(|&p| p == 128));
    }

    #[test]
    fn header_and_orientation() {
        let (bytes, _, _) = encode_pgm(&array![[0.0, 1.0, 2.0]]).unwrap();
        assert!(bytes.starts_with(b"P5\n3 1\n255\n"));
        let img = xz_image(&array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(img, array![[3.0, 4.0], [1.0, 2.0]]);
    }

    #[test]
    fn nan_is_rejected() {
        assert!(grey_levels(&array![[0.0, f64::NAN]]).is_err());
    }
}
