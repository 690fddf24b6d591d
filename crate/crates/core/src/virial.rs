//! Radial cutoff weights and the localized virial functional.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::TrajectoryResult;
use crate::error::{Error, Result};
use crate::spectral::{gradient, Field, Grid};

/// Quintic smoothstep `10t^3 - 15t^4 + 6t^5`, C^2 at both ends.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep_prime(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// Cutoff `chi` with `phi'(r) = r chi(r)`: 1 on `[0, 1]`, 0 beyond 10.
pub fn chi(r: f64) -> f64 {
    1.0 - smoothstep((r - 1.0) / 9.0)
}

fn chi_prime(r: f64) -> f64 {
    -smoothstep_prime((r - 1.0) / 9.0) / 9.0
}

/// `phi(r) = int_0^r t chi(t) dt`; the integrand is a polynomial of degree 6 on
/// `[1, 10]`, so four-point Gauss-Legendre is exact.
pub fn phi(r: f64) -> f64 {
    if r <= 1.0 {
        return 0.5 * r * r;
    }
    let b = r.min(10.0);
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let half = 0.5 * (b - 1.0);
    let mid = 0.5 * (b + 1.0);
    let tail: f64 = NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(&z, w)| {
            let t = mid + half * z;
            w * t * chi(t)
        })
        .sum();
    0.5 + half * tail
}

/// `phi''(r) = chi(r) + r chi'(r)`.
pub fn phi_second(r: f64) -> f64 {
    chi(r) + r * chi_prime(r)
}

#[derive(Debug, Clone)]
pub struct VirialWeight {
    pub r: f64,
    pub phi: Field,
    pub grad_phi: Vec<Field>,
    pub lap_phi: Field,
    pub psi1: Field,
    pub psi2: Field,
}

impl VirialWeight {
    pub fn grid(&self) -> &Arc<Grid> {
        self.phi.grid()
    }
}

/// Samples `phi_R(|x|) = R^2 phi(|x| / R)` and its derivatives about the box center.
pub fn make_weight(r: f64, grid: &Arc<Grid>) -> Result<VirialWeight> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Geometry(format!("cutoff radius must be positive, got {r}")));
    }
    if 10.0 * r + 2.0 * grid.dx() > grid.half_length() {
        return Err(Error::Geometry(format!(
            "10R + 2dx = {} exceeds the half length {}",
            10.0 * r + 2.0 * grid.dx(),
            grid.half_length()
        )));
    }
    let dim = grid.dim();
    let nd = dim as f64;
    let pos = grid.positions();
    let radius: Vec<f64> = pos
        .iter()
        .map(|x| x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let real = |v: Vec<f64>| {
        Field::new(
            Arc::clone(grid),
            v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        )
    };
    let phi_v: Vec<f64> = radius.iter().map(|&q| r * r * phi(q / r)).collect();
    let grad: Vec<Field> = (0..dim)
        .map(|a| real(pos.iter().zip(&radius).map(|(x, &q)| chi(q / r) * x[a]).collect()))
        .collect::<Result<_>>()?;
    let second: Vec<f64> = radius.iter().map(|&q| phi_second(q / r)).collect();
    let lap: Vec<f64> = radius
        .iter()
        .zip(&second)
        .map(|(&q, &d2)| d2 + (nd - 1.0) * chi(q / r))
        .collect();
    let psi1: Vec<f64> = second.iter().map(|d2| 1.0 - d2).collect();
    let psi2: Vec<f64> = lap.iter().map(|l| nd - l).collect();
    Ok(VirialWeight {
        r,
        phi: real(phi_v)?,
        grad_phi: grad,
        lap_phi: real(lap)?,
        psi1: real(psi1)?,
        psi2: real(psi2)?,
    })
}

/// `2 Im int conj(u) grad(phi) . grad(u) dx`.
pub fn localized_virial(f: &Field, w: &VirialWeight) -> Result<f64> {
    f.check_same_grid(&w.phi)?;
    let du = gradient(f)?;
    let u = f.values();
    let mut acc = 0.0;
    for (d, gp) in du.iter().zip(&w.grad_phi) {
        acc += u
            .iter()
            .zip(d.values())
            .zip(gp.values())
            .map(|((&a, &b), &g)| (a.conj() * b).im * g.re)
            .sum::<f64>();
    }
    Ok(2.0 * acc * f.grid().cell_volume())
}

/// Derivative of a sampled series by three-point Lagrange differences (exact on
/// quadratics, one-sided at the ends).
pub fn differentiate(t: &[f64], m: &[f64]) -> Result<Vec<(f64, f64)>> {
    if t.len() != m.len() || t.len() < 3 {
        return Err(Error::Data(format!(
            "need at least 3 samples to differentiate, got {}",
            t.len().min(m.len())
        )));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Data("sample times must be strictly increasing".into()));
    }
    let d3 = |i0: usize, at: f64| {
        let (a, b, c) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let la = (2.0 * at - b - c) / ((a - b) * (a - c));
        let lb = (2.0 * at - a - c) / ((b - a) * (b - c));
        let lc = (2.0 * at - a - b) / ((c - a) * (c - b));
        la * m[i0] + lb * m[i0 + 1] + lc * m[i0 + 2]
    };
    let n = t.len();
    Ok((0..n)
        .map(|i| {
            let i0 = i.saturating_sub(1).min(n - 3);
            (t[i], d3(i0, t[i]))
        })
        .collect())
}

/// `dM/dt` along a trajectory from its virial diagnostic column.
pub fn virial_rate(traj: &TrajectoryResult) -> Result<Vec<(f64, f64)>> {
    let (t, m): (Vec<f64>, Vec<f64>) = traj
        .diagnostics
        .iter()
        .filter_map(|d| d.virial.map(|v| (d.t, v)))
        .unzip();
    if t.len() < 3 {
        return Err(Error::Data(format!(
            "virial column has {} rows, need at least 3",
            t.len()
        )));
    }
    differentiate(&t, &m)
}
