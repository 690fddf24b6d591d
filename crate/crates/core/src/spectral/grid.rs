use std::fmt;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlannerScalar};

use crate::error::{Error, Result};

/// Uniform periodic grid on the box `[-L, L)^dim` with `n` points per axis.
///
/// Sample `j` along an axis sits at `x_j = -L + j * dx`, so the box center
/// `x = 0` is index `n / 2`. Wavenumbers use the symmetric range
/// `m in [-n/2, n/2 - 1]`, `k = pi * m / L`, stored in FFT order.
pub struct Grid {
    dim: usize,
    n: usize,
    half_length: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
    k_norm_sq: OnceLock<Vec<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_length == other.half_length
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Arc<Grid>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Geometry(format!("dimension {dim} not in {{1, 2, 3}}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::Geometry(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        let dx = 2.0 * half_length / n as f64;
        let wavenumbers = (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                PI * m as f64 / half_length
            })
            .collect();
        let mut planner = FftPlannerScalar::new();
        Ok(Arc::new(Grid {
            dim,
            n,
            half_length,
            dx,
            wavenumbers,
            fft_forward: planner.plan_fft_forward(n),
            fft_inverse: planner.plan_fft_inverse(n),
            k_norm_sq: OnceLock::new(),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Total number of samples, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `dx^dim` of the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    /// Physical coordinate of sample `j` along any axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx
    }

    /// Index of the box center along each axis.
    pub fn center_index(&self) -> usize {
        self.n / 2
    }

    /// Splits a flat row-major index into per-axis indices.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Physical position of every sample, row-major.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        let mut idx = [0usize; 3];
        (0..self.len())
            .map(|flat| {
                self.unravel(flat, &mut idx[..self.dim]);
                let mut x = [0.0; 3];
                for a in 0..self.dim {
                    x[a] = self.coord(idx[a]);
                }
                x
            })
            .collect()
    }

    /// `|xi|^2` at every frequency sample, row-major in FFT order.
    pub fn k_norm_sq(&self) -> &[f64] {
        self.k_norm_sq.get_or_init(|| {
            let mut idx = [0usize; 3];
            (0..self.len())
                .map(|flat| {
                    self.unravel(flat, &mut idx[..self.dim]);
                    idx[..self.dim]
                        .iter()
                        .map(|&j| self.wavenumbers[j] * self.wavenumbers[j])
                        .sum()
                })
                .collect()
        })
    }

    /// Minimal periodic distance from sample `flat` to the grid origin index 0,
    /// i.e. the torus metric on index offsets scaled by `dx`.
    pub fn periodic_offset_norm(&self, flat: usize) -> f64 {
        let mut idx = [0usize; 3];
        self.unravel(flat, &mut idx[..self.dim]);
        idx[..self.dim]
            .iter()
            .map(|&j| {
                let m = if j <= self.n / 2 { j } else { self.n - j } as f64 * self.dx;
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fft_forward);
    }

    /// Unnormalized inverse; callers divide by `len()`.
    pub(crate) fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fft_inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), self.len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let total = data.len();
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            // gather every line along `axis` into a contiguous buffer
            let mut line = 0;
            for base in (0..total).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for j in 0..n {
                        lines[line * n + j] = data[start + j * stride];
                    }
                    line += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for base in (0..total).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for j in 0..n {
                        data[start + j * stride] = lines[line * n + j];
                    }
                    line += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_wavenumbers() {
        let g = Grid::new(1, 16, 3.0).unwrap();
        assert_eq!(g.dx() * g.n() as f64, 6.0);
        assert_eq!(g.wavenumbers().len(), 16);
        assert_eq!(g.wavenumbers().iter().filter(|&&k| k == 0.0).count(), 1);
        assert_eq!(g.wavenumbers()[8], -PI * 8.0 / 3.0);
        assert_eq!(g.coord(g.center_index()), 0.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(2, 16, -1.0).is_err());
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        let mut idx = [0; 3];
        for flat in [0, 7, 63, 100, 511] {
            g.unravel(flat, &mut idx);
            assert_eq!(g.ravel(&idx), flat);
        }
    }
}
