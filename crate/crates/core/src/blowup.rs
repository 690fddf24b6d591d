//! L^2 concentration, blow-up rate fits and the rescaled comparison with `Q`.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{spectral_tail_fraction, TrajectoryResult, RESOLVED_TAIL};
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::snapshot::Snapshot;
use crate::spectral::{hs_seminorm, sample_tensor, Field, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSample {
    pub t: f64,
    pub a: f64,
    /// True when `a` had to be clamped into `[2 dx, L]`.
    pub clamped: bool,
    pub center_index: Vec<usize>,
    pub center: Vec<f64>,
    pub window_mass: f64,
}

/// Mass in the periodic ball of radius `a` around every grid point.
pub fn windowed_masses(f: &Field, a: f64) -> Result<Vec<f64>> {
    let g = f.grid();
    if !(a > 0.0 && a <= g.half_length() * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "window radius {a} outside (0, {}]",
            g.half_length()
        )));
    }
    let len = g.len();
    let edge = a * (1.0 + 1e-12);
    let mut ball: Vec<Complex64> = (0..len)
        .map(|i| Complex64::new(if g.periodic_offset_norm(i) <= edge { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let mut dens: Vec<Complex64> = f.values().iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    g.fft_forward(&mut ball);
    g.fft_forward(&mut dens);
    for (d, b) in dens.iter_mut().zip(&ball) {
        *d *= b;
    }
    g.fft_inverse(&mut dens);
    let scale = g.cell_volume() / len as f64;
    Ok(dens.iter().map(|v| (v.re * scale).max(0.0)).collect())
}

fn argmax_first(w: &[f64]) -> usize {
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * max.abs().max(f64::MIN_POSITIVE);
    w.iter().position(|&v| v >= max - tol).unwrap_or(0)
}

fn refine(g: &Grid, w: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = g.n();
    let w0 = w[g.ravel(idx)];
    (0..g.dim())
        .map(|a| {
            let mut lo = idx.to_vec();
            let mut hi = idx.to_vec();
            lo[a] = (idx[a] + n - 1) % n;
            hi[a] = (idx[a] + 1) % n;
            let (wl, wh) = (w[g.ravel(&lo)], w[g.ravel(&hi)]);
            let curv = wl - 2.0 * w0 + wh;
            let off = if curv < 0.0 {
                (0.5 * (wl - wh) / curv).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            g.coord(idx[a]) + off * g.dx()
        })
        .collect()
}

/// Maximizing window: smallest flat index among ties, then a quadratic sub-grid fit.
pub fn concentration_mass(f: &Field, a: f64) -> Result<ConcentrationSample> {
    let g = f.grid();
    let w = windowed_masses(f, a)?;
    let best = argmax_first(&w);
    let mut idx = vec![0; g.dim()];
    g.unravel(best, &mut idx);
    let window_mass = w[best].min(f.mass());
    Ok(ConcentrationSample {
        t: 0.0,
        a,
        clamped: false,
        center: refine(g, &w, &idx),
        center_index: idx,
        window_mass,
    })
}

fn clamp_radius(a: f64, g: &Grid) -> (f64, bool) {
    let lo = 2.0 * g.dx();
    let hi = g.half_length();
    if !a.is_finite() || a > hi {
        (hi, true)
    } else if a < lo {
        (lo, true)
    } else {
        (a, false)
    }
}

/// Radius `a(t) = hs^{-(1/s - delta)}` before clamping.
pub fn concentration_radius(hs: f64, s: f64, delta: f64) -> f64 {
    hs.powf(-(1.0 / s - delta))
}

pub fn concentration_series(traj: &TrajectoryResult, delta: f64) -> Result<Vec<ConcentrationSample>> {
    concentration_series_of(&traj.snapshots, traj.params.s, delta)
}

pub fn concentration_series_of(snaps: &[Snapshot], s: f64, delta: f64) -> Result<Vec<ConcentrationSample>> {
    if !(delta > 0.0 && delta < 1.0 / s) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1/s)")));
    }
    if snaps.is_empty() {
        return Err(Error::Data("trajectory has no snapshots".into()));
    }
    snaps
        .iter()
        .map(|snap| {
            let hs = hs_seminorm(&snap.field, s)?;
            let (a, clamped) = clamp_radius(concentration_radius(hs, s, delta), snap.field.grid());
            let mut c = concentration_mass(&snap.field, a)?;
            c.t = snap.time;
            c.clamped = clamped;
            Ok(c)
        })
        .collect()
}

pub fn concentration_csv(samples: &[ConcentrationSample], dim: usize) -> String {
    let mut out = String::from("t,a,");
    for k in 0..dim {
        write!(out, "cx{k},").unwrap();
    }
    out.push_str("window_mass\n");
    for c in samples {
        write!(out, "{:.17e},{:.17e},", c.t, c.a).unwrap();
        for x in &c.center {
            write!(out, "{x:.17e},").unwrap();
        }
        writeln!(out, "{:.17e}", c.window_mass).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFitStatus {
    Blowup,
    NotBlowup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub t_star: f64,
    pub kappa: f64,
    pub r_squared: f64,
    pub status: RateFitStatus,
    pub rows: usize,
}

impl RateFit {
    pub fn summary(&self) -> String {
        format!(
            "t_star={:.17e}\nkappa={:.17e}\nr_squared={:.17e}\nstatus={}\nrows={}\n",
            self.t_star,
            self.kappa,
            self.r_squared,
            match self.status {
                RateFitStatus::Blowup => "Blowup",
                RateFitStatus::NotBlowup => "NotBlowup",
            },
            self.rows
        )
    }
}

/// Least squares of `y` on `x`: returns (slope, intercept, sse, sst).
fn regress(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - my - slope * (a - mx);
            r * r
        })
        .sum::<f64>();
    (slope, my - slope * mx, sse, syy)
}

/// Fits `hs ~ A (T* - t)^{-kappa}` to the last `window` fraction of rows.
pub fn fit_rate(t: &[f64], hs: &[f64], window: f64) -> Result<RateFit> {
    if t.len() != hs.len() {
        return Err(Error::Data("time and norm columns differ in length".into()));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Domain(format!("window fraction {window} outside (0, 1]")));
    }
    let k = ((window * t.len() as f64).ceil() as usize).min(t.len());
    if k < 3 {
        return Err(Error::Data(format!("fit window holds {k} rows, need at least 3")));
    }
    let t = &t[t.len() - k..];
    let hs = &hs[hs.len() - k..];
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("times not strictly increasing".into()));
    }
    if hs.windows(2).any(|w| !(w[1] > w[0])) || hs.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("Hs norm not strictly increasing over the fit window".into()));
    }
    let y: Vec<f64> = hs.iter().map(|v| v.ln()).collect();
    let t_last = t[k - 1];
    let span = t_last - t[0];
    let sse_at = |z: f64| {
        let ts = t_last + z.exp();
        let x: Vec<f64> = t.iter().map(|&ti| (ts - ti).ln()).collect();
        regress(&x, &y).2
    };
    let z_lo = (1e-10 * span).ln();
    let z_hi = (1e4 * span).ln();
    let m = 400;
    let zs: Vec<f64> = (0..=m).map(|i| z_lo + (z_hi - z_lo) * i as f64 / m as f64).collect();
    let vals: Vec<f64> = zs.iter().map(|&z| sse_at(z)).collect();
    let best = (0..=m)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    let at_bound = best == m;
    let (mut a, mut b) = (zs[best.saturating_sub(1)], zs[(best + 1).min(m)]);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (sse_at(c), sse_at(d));
    while (b - a).abs() > 1e-15 * (1.0 + a.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = sse_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = sse_at(d);
        }
    }
    let z = 0.5 * (a + b);
    let t_star = t_last + z.exp();
    let x: Vec<f64> = t.iter().map(|&ti| (t_star - ti).ln()).collect();
    let (slope, _, sse, sst) = regress(&x, &y);
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let status = if at_bound || r_squared < 0.9 {
        RateFitStatus::NotBlowup
    } else {
        RateFitStatus::Blowup
    };
    Ok(RateFit {
        t_star,
        kappa: -slope,
        r_squared,
        status,
        rows: k,
    })
}

pub fn blowup_rate_fit(traj: &TrajectoryResult, window: f64) -> Result<RateFit> {
    let t: Vec<f64> = traj.diagnostics.iter().map(|d| d.t).collect();
    let hs: Vec<f64> = traj.diagnostics.iter().map(|d| d.hs).collect();
    fit_rate(&t, &hs, window)
}

/// `rho^{N/2} f(rho x + center)` sampled on `target`. Points whose offset
/// `rho x` leaves the source box are set to zero instead of wrapping.
pub fn rescale(f: &Field, rho: f64, center: &[f64], target: &Arc<Grid>) -> Result<Field> {
    let dim = f.grid().dim();
    if target.dim() != dim || center.len() != dim {
        return Err(Error::Geometry("dimension mismatch in rescale".into()));
    }
    let half = f.grid().half_length();
    let inside: Vec<bool> = (0..target.n())
        .map(|j| (rho * target.coord(j)).abs() <= half * (1.0 + 1e-12))
        .collect();
    let targets: Vec<Vec<f64>> = (0..dim)
        .map(|a| (0..target.n()).map(|j| rho * target.coord(j) + center[a]).collect())
        .collect();
    let amp = rho.powf(0.5 * dim as f64);
    let mut vals = sample_tensor(f, &targets)?;
    let mut idx = [0usize; 3];
    for (flat, v) in vals.iter_mut().enumerate() {
        target.unravel(flat, &mut idx[..dim]);
        *v = if idx[..dim].iter().all(|&j| inside[j]) {
            *v * amp
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    Field::new(Arc::clone(target), vals)
}

/// Phase in `[0, 2 pi)` that best aligns `v` with `q`, plus the aligned field.
fn align(v: &Field, q: &Field) -> Result<(f64, Field)> {
    let mut theta = q.inner(v)?.arg().rem_euclid(TAU);
    if theta >= TAU {
        theta -= TAU;
    }
    Ok((theta, v.scale(Complex64::from_polar(1.0, theta))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDistance {
    pub t: f64,
    pub rho: f64,
    pub theta: f64,
    pub center: Vec<f64>,
    pub l2_dist: f64,
    pub hs_dist: f64,
}

fn check_critical(gs: &GroundState, s: f64, dim: usize) -> Result<()> {
    let pc = 2.0 * s / dim as f64;
    if gs.dim != dim || (gs.s - s).abs() > 1e-12 || (gs.p - pc).abs() > 1e-12 * pc {
        return Err(Error::GroundStateMismatch(format!(
            "need the ground state for (s = {s}, N = {dim}, p = {pc}), got (s = {}, N = {}, p = {})",
            gs.s, gs.dim, gs.p
        )));
    }
    Ok(())
}

/// Rescales with `rho^s = ||Q||_Hs / ||f||_Hs`, recenters at the concentration
/// center and measures the phase-aligned distance to `Q` on the ground-state grid.
pub fn limiting_profile(f: &Field, gs: &GroundState, s: f64) -> Result<ProfileDistance> {
    check_critical(gs, s, f.grid().dim())?;
    let hs_f = hs_seminorm(f, s)?;
    if !(hs_f > 0.0) {
        return Err(Error::Domain("limiting profile of a zero or constant field".into()));
    }
    let rho = (gs.hs() / hs_f).powf(1.0 / s);
    let (a, _) = clamp_radius(rho, f.grid());
    let center = concentration_mass(f, a)?.center;
    let v = rescale(f, rho, &center, gs.profile.grid())?;
    let (theta, aligned) = align(&v, &gs.profile)?;
    let diff = aligned.sub(&gs.profile)?;
    Ok(ProfileDistance {
        t: 0.0,
        rho,
        theta,
        center,
        l2_dist: diff.l2_norm(),
        hs_dist: hs_seminorm(&diff, s)?,
    })
}

pub fn profile_series(snaps: &[Snapshot], gs: &GroundState, s: f64) -> Result<Vec<ProfileDistance>> {
    snaps
        .iter()
        .map(|snap| {
            let mut d = limiting_profile(&snap.field, gs, s)?;
            d.t = snap.time;
            Ok(d)
        })
        .collect()
}

pub fn profile_csv(rows: &[ProfileDistance]) -> String {
    let mut out = String::from("t,rho,theta,l2_dist,hs_dist\n");
    for r in rows {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.rho, r.theta, r.l2_dist, r.hs_dist
        )
        .unwrap();
    }
    out
}

/// Snapshots whose spectral tail fraction is within `RESOLVED_TAIL`.
pub fn resolved_snapshots(snaps: &[Snapshot]) -> Vec<&Snapshot> {
    snaps
        .iter()
        .filter(|s| s.field.is_finite() && spectral_tail_fraction(&s.field) <= RESOLVED_TAIL)
        .collect()
}

/// Best match of `f` to `c rho^{N/2} e^{i theta} Q(rho (x - x0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitFit {
    pub c_abs: f64,
    pub rho: f64,
    pub theta: f64,
    pub center: Vec<f64>,
    /// `||v - Q|| / ||Q||` after undoing the fitted parameters.
    pub rel_l2_dist: f64,
}

pub fn orbit_fit(f: &Field, gs: &GroundState) -> Result<OrbitFit> {
    let dim = f.grid().dim();
    if gs.dim != dim {
        return Err(Error::GroundStateMismatch(format!(
            "ground state is {}-dimensional, data are {dim}-dimensional",
            gs.dim
        )));
    }
    let mass = f.mass();
    let hs_f = hs_seminorm(f, gs.s)?;
    if !(mass > 0.0 && hs_f > 0.0) {
        return Err(Error::Domain("orbit fit of a zero or constant field".into()));
    }
    let c_abs = (mass / gs.mass_sq).sqrt();
    let rho = (hs_f / (c_abs * gs.hs())).powf(1.0 / gs.s);
    let (a, _) = clamp_radius(1.0 / rho, f.grid());
    let center = concentration_mass(f, a)?.center;
    let v = rescale(f, 1.0 / rho, &center, gs.profile.grid())?.scale(Complex64::new(1.0 / c_abs, 0.0));
    let (theta, aligned) = align(&v, &gs.profile)?;
    let dist = aligned.sub(&gs.profile)?.l2_norm() / gs.l2_norm();
    Ok(OrbitFit {
        c_abs,
        rho,
        theta,
        center,
        rel_l2_dist: dist,
    })
}
