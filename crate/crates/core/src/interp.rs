//! Four-point Lagrange interpolation on uniform grids.

use ndarray::Array2;

/// Weights of the cubic through nodes `−1, 0, 1, 2` evaluated at `t ∈ [0, 1]`.
pub fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Interpolates at fractional indices `(fi, fj)`. Stencil points outside
/// the grid count as zero; `None` if the point itself is outside.
pub fn cubic2(values: &Array2<f64>, fi: f64, fj: f64) -> Option<f64> {
    let (ni, nj) = values.dim();
    if !(fi >= 0.0 && fj >= 0.0 && fi <= (ni - 1) as f64 && fj <= (nj - 1) as f64) {
        return None;
    }
    let (i0, j0) = (fi.floor() as i64, fj.floor() as i64);
    let (wi, wj) = (cubic_weights(fi - i0 as f64), cubic_weights(fj - j0 as f64));
    let mut acc = 0.0;
    for (a, wa) in wi.iter().enumerate() {
        let i = i0 + a as i64 - 1;
        if *wa == 0.0 || i < 0 || i >= ni as i64 {
            continue;
        }
        let row = values.row(i as usize);
        let mut inner = 0.0;
        for (b, wb) in wj.iter().enumerate() {
            let j = j0 + b as i64 - 1;
            if j >= 0 && j < nj as i64 {
                inner += wb * row[j as usize];
            }
        }
        acc += wa * inner;
    }
    Some(acc)
}

/// One-dimensional counterpart of [`cubic2`].
pub fn cubic1(values: &[f64], fi: f64) -> Option<f64> {
    let n = values.len();
    if !(fi >= 0.0 && fi <= (n - 1) as f64) {
        return None;
    }
    let i0 = fi.floor() as i64;
    let w = cubic_weights(fi - i0 as f64);
    Some(
        w.iter()
            .enumerate()
            .filter_map(|(a, wa)| {
                let i = i0 + a as i64 - 1;
                (i >= 0 && i < n as i64).then(|| wa * values[i as usize])
            })
            .sum(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_reproduced_exactly() {
        let v = Array2::from_shape_fn((5, 6), |(i, j)| (i * 7 + j * 3) as f64 * 0.37);
        for i in 0..5 {
            for j in 0..6 {
                assert_eq!(cubic2(&v, i as f64, j as f64), Some(v[[i, j]]));
            }
        }
        assert_eq!(cubic2(&v, -0.1, 0.0), None);
    }

    #[test]
    fn cubics_are_exact_in_the_interior() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let v: Vec<f64> = (0..8).map(|i| f(i as f64)).collect();
        assert!((cubic1(&v, 3.3).unwrap() - f(3.3)).abs() < 1e-12);
    }
}
