use num_complex::Complex64;

use super::field::Field;
use crate::error::{Error, Result};

/// Evaluates the trigonometric interpolant of `f` on a tensor product of
/// per-axis target coordinates. Output is row-major with shape
/// `(targets[0].len(), targets[1].len(), ...)`.
///
/// The Nyquist mode is split symmetrically between `+k` and `-k`, so real
/// samples give a real interpolant and nodes reproduce the samples.
pub fn sample_tensor(f: &Field, targets: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let g = f.grid();
    let dim = g.dim();
    if targets.len() != dim {
        return Err(Error::Domain(format!(
            "expected {dim} target axes, got {}",
            targets.len()
        )));
    }
    let n = g.n();
    let ks = g.wavenumbers();
    let origin = -g.half_length();
    let nyquist = n / 2;

    let mut shape: Vec<usize> = vec![n; dim];
    let mut data: Vec<Complex64> = f.spectrum().to_vec();
    for axis in 0..dim {
        let m = targets[axis].len();
        let weights: Vec<Complex64> = targets[axis]
            .iter()
            .flat_map(|&y| {
                let shift = y - origin;
                (0..n).map(move |j| {
                    if j == nyquist {
                        Complex64::new((ks[j] * shift).cos() / n as f64, 0.0)
                    } else {
                        Complex64::from_polar(1.0 / n as f64, ks[j] * shift)
                    }
                })
            })
            .collect();
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = vec![Complex64::new(0.0, 0.0); outer * m * inner];
        for o in 0..outer {
            for i in 0..m {
                let w = &weights[i * n..(i + 1) * n];
                let dst = &mut out[(o * m + i) * inner..(o * m + i + 1) * inner];
                for (j, &wj) in w.iter().enumerate() {
                    let src = &data[(o * n + j) * inner..(o * n + j + 1) * inner];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += wj * s;
                    }
                }
            }
        }
        shape[axis] = m;
        data = out;
    }
    Ok(data)
}

/// Convenience: interpolant at a single point.
pub fn sample_point(f: &Field, x: &[f64]) -> Result<Complex64> {
    let targets: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    Ok(sample_tensor(f, &targets)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn reproduces_nodes() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let f = Field::from_fn(g.clone(), |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.3 * x[1])
        });
        let axis: Vec<f64> = (0..16).map(|j| g.coord(j)).collect();
        let v = sample_tensor(&f, &[axis.clone(), axis]).unwrap();
        for (a, b) in v.iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn exact_for_resolved_modes() {
        let g = Grid::new(1, 32, PI).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new((3.0 * x[0]).cos(), (2.0 * x[0]).sin()));
        for &y in &[0.123, -2.9, 1.7] {
            let v = sample_point(&f, &[y]).unwrap();
            let want = Complex64::new((3.0 * y).cos(), (2.0 * y).sin());
            assert!((v - want).norm() < 1e-13);
        }
    }
}
