use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Complex samples on a periodic grid with a lazily computed DFT image.
///
/// The spectrum is the raw (unnormalized) forward DFT of the samples, so
/// Plancherel reads `sum |u|^2 = sum |u_hat|^2 / len`.
#[derive(Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.clone(),
            spectrum,
        }
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Field {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Samples `f(x)` at every grid position; `x` has `dim` entries.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Field {
        let dim = grid.dim();
        let values = grid.positions().iter().map(|x| f(&x[..dim])).collect();
        Field {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_real_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Field {
        Field::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Builds a field from its raw DFT image.
    pub fn from_spectrum(grid: Arc<Grid>, spectrum: Vec<Complex64>) -> Result<Field> {
        if spectrum.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} spectral samples, got {}",
                grid.len(),
                spectrum.len()
            )));
        }
        let mut values = spectrum.clone();
        grid.fft_inverse(&mut values);
        let scale = 1.0 / grid.len() as f64;
        values.iter_mut().for_each(|v| *v *= scale);
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Ok(Field {
            grid,
            values,
            spectrum: cell,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut s = self.values.clone();
            self.grid.fft_forward(&mut s);
            s
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidField("non-finite samples".into()))
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn scale(&self, a: Complex64) -> Field {
        self.map(|v| v * a)
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    /// Pointwise `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: Complex64, other: &Field, b: Complex64) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| a * u + b * v)
                .collect(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::InvalidField(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Circular shift by whole samples: the value at index `j` moves to `j + shift`.
    pub fn circular_shift(&self, shifts: &[isize]) -> Field {
        let g = &self.grid;
        let n = g.n() as isize;
        let dim = g.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        let mut idx = [0usize; 3];
        for (flat, &v) in self.values.iter().enumerate() {
            g.unravel(flat, &mut idx[..dim]);
            for a in 0..dim {
                let s = shifts.get(a).copied().unwrap_or(0);
                idx[a] = (idx[a] as isize + s).rem_euclid(n) as usize;
            }
            out[g.ravel(&idx[..dim])] = v;
        }
        Field {
            grid: Arc::clone(g),
            values: out,
            spectrum: OnceLock::new(),
        }
    }

    /// Applies a Fourier multiplier given as a function of the flat frequency index.
    pub fn apply_multiplier(&self, m: impl Fn(usize) -> Complex64) -> Field {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(i))
            .collect();
        Field::from_spectrum(Arc::clone(&self.grid), spec).expect("spectrum length matches grid")
    }

    /// Discrete `||u||_{L^2}^2` by the rectangle rule.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// The same quantity evaluated from the spectrum.
    pub fn mass_spectral(&self) -> f64 {
        self.spectrum().iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
            / self.grid.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `sum a * conj(b) dx^N`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
