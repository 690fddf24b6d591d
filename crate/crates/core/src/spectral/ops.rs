use num_complex::Complex64;

use super::field::Field;
use super::params::ModelParams;
use crate::error::{Error, Result};

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("fractional order s = {s} outside (0, 1]")))
    }
}

/// `(-Delta)^s f` as the Fourier multiplier `|xi|^{2s}`; the zero mode maps to 0.
pub fn frac_laplacian(f: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    f.ensure_finite()?;
    let k2 = f.grid().k_norm_sq();
    Ok(f.apply_multiplier(|i| Complex64::new(k2[i].powf(s), 0.0)))
}

/// `||(-Delta)^{s/2} f||_{L^2}` via Plancherel.
pub fn hs_seminorm(f: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    f.ensure_finite()?;
    Ok(hs_seminorm_sq_unchecked(f, s).sqrt())
}

pub(crate) fn hs_seminorm_sq_unchecked(f: &Field, s: f64) -> f64 {
    let g = f.grid();
    let k2 = g.k_norm_sq();
    let sum: f64 = f
        .spectrum()
        .iter()
        .zip(k2)
        .map(|(c, &k)| if k > 0.0 { k.powf(s) * c.norm_sqr() } else { 0.0 })
        .sum();
    sum * g.cell_volume() / g.len() as f64
}

/// `sum |f|^q dx^N`, i.e. `||f||_{L^q}^q`.
pub fn lq_power(f: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("L^q exponent q = {q} must be >= 1")));
    }
    f.ensure_finite()?;
    Ok(lq_power_unchecked(f, q))
}

pub(crate) fn lq_power_unchecked(f: &Field, q: f64) -> f64 {
    let half = 0.5 * q;
    f.values().iter().map(|v| v.norm_sqr().powf(half)).sum::<f64>() * f.grid().cell_volume()
}

pub fn lq_norm(f: &Field, q: f64) -> Result<f64> {
    Ok(lq_power(f, q)?.powf(1.0 / q))
}

/// Spectral gradient, one field per axis. The Nyquist mode of `i k` is dropped
/// so real input stays real.
pub fn gradient(f: &Field) -> Result<Vec<Field>> {
    f.ensure_finite()?;
    let g = f.grid();
    let n = g.n();
    let dim = g.dim();
    let k = g.wavenumbers();
    Ok((0..dim)
        .map(|axis| {
            let stride = n.pow((dim - 1 - axis) as u32);
            f.apply_multiplier(|flat| {
                let j = (flat / stride) % n;
                if j == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k[j])
                }
            })
        })
        .collect())
}

/// The conserved Hamiltonian
/// `1/2 ||(-Delta)^{s/2} u||^2 - l1/(2p1+2) ||u||_{2p1+2}^{2p1+2} - l2/(2p2+2) ||u||_{2p2+2}^{2p2+2}`.
pub fn energy(f: &Field, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    f.ensure_finite()?;
    let parts = EnergyParts::of(f, params);
    Ok(parts.total(params))
}

/// The three ingredients of the energy, reused by diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParts {
    pub hs_sq: f64,
    pub lp1: f64,
    pub lp2: f64,
}

impl EnergyParts {
    pub fn of(f: &Field, params: &ModelParams) -> Self {
        EnergyParts {
            hs_sq: hs_seminorm_sq_unchecked(f, params.s),
            lp1: lq_power_unchecked(f, 2.0 * params.p1 + 2.0),
            lp2: lq_power_unchecked(f, 2.0 * params.p2 + 2.0),
        }
    }

    pub fn total(&self, params: &ModelParams) -> f64 {
        0.5 * self.hs_sq
            - params.lambda1 / (2.0 * params.p1 + 2.0) * self.lp1
            - params.lambda2 / (2.0 * params.p2 + 2.0) * self.lp2
    }
}
