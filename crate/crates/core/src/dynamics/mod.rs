//! Strang-split time stepping with conservation monitoring and blow-up stops.

mod initial;

pub use initial::{gaussian, perturb, ring, scaled_ground_state};

use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_complex::Complex64;

use crate::blowup::concentration_mass;
use crate::error::{Error, Result};
use crate::snapshot::Snapshot;
use crate::spectral::{EnergyParts, Field, Grid, ModelParams};
use crate::virial::{localized_virial, VirialWeight};

/// How the `conc_mass` diagnostic picks its window radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConcentrationWindow {
    Fixed(f64),
    /// `a(t) = hs(t)^{-(1/s - delta)}`, clamped to `[2 dx, L]`.
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored snapshots; 0 disables them.
    pub snapshot_every: usize,
    pub diag_every: usize,
    pub stop_gradient_factor: f64,
    pub stop_mass_drift: f64,
    pub adapt: bool,
    /// Divisor applied to `dt` at each doubling of the Hs norm.
    pub adapt_factor: f64,
    pub dt_min: f64,
    pub concentration: Option<ConcentrationWindow>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            t_end: 1.0,
            snapshot_every: 0,
            diag_every: 10,
            stop_gradient_factor: 1e3,
            stop_mass_drift: 1e-8,
            adapt: false,
            adapt_factor: 2.0,
            dt_min: 1e-9,
            concentration: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.stop_gradient_factor > 1.0) {
            return bad(format!(
                "stop_gradient_factor must exceed 1, got {}",
                self.stop_gradient_factor
            ));
        }
        if !(self.stop_mass_drift > 0.0) {
            return bad("stop_mass_drift must be positive".into());
        }
        if self.diag_every == 0 {
            return bad("diag_every must be at least 1".into());
        }
        if !(self.adapt_factor > 1.0) {
            return bad(format!("adapt_factor must exceed 1, got {}", self.adapt_factor));
        }
        if !(self.dt_min > 0.0) {
            return bad("dt_min must be positive".into());
        }
        match self.concentration {
            Some(ConcentrationWindow::Fixed(a)) if !(a > 0.0) => {
                bad(format!("concentration radius must be positive, got {a}"))
            }
            Some(ConcentrationWindow::Rate(d)) if !(d > 0.0) => {
                bad(format!("concentration delta must be positive, got {d}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedTEnd,
    GradientBlowupStop,
    MassDriftAbort,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::ReachedTEnd => "ReachedTEnd",
            StopReason::GradientBlowupStop => "GradientBlowupStop",
            StopReason::MassDriftAbort => "MassDriftAbort",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub hs: f64,
    pub lp1: f64,
    pub lp2: f64,
    pub virial: Option<f64>,
    pub conc_mass: Option<f64>,
}

pub const DIAGNOSTICS_HEADER: &str = "t,mass,energy,hs,lp1,lp2,virial,conc_mass";

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
            self.t,
            self.mass,
            self.energy,
            self.hs,
            self.lp1,
            self.lp2,
            o(self.virial),
            o(self.conc_mass)
        )
    }
}

pub fn diagnostics_csv(rows: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(160 * (rows.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == DIAGNOSTICS_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "diagnostics header mismatch: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != 8 {
                return Err(Error::Format(format!("diagnostics row {}: expected 8 cells", i + 2)));
            }
            let num = |c: &str| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("diagnostics row {}: bad number {c:?}", i + 2)))
            };
            let opt = |c: &str| if c.trim().is_empty() { Ok(None) } else { num(c).map(Some) };
            Ok(DiagnosticsRecord {
                t: num(cells[0])?,
                mass: num(cells[1])?,
                energy: num(cells[2])?,
                hs: num(cells[3])?,
                lp1: num(cells[4])?,
                lp2: num(cells[5])?,
                virial: opt(cells[6])?,
                conc_mass: opt(cells[7])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub params: ModelParams,
    pub config: SimConfig,
    pub final_field: Field,
    pub stop_reason: StopReason,
    /// Why the run stopped, in words.
    pub stop_detail: String,
    pub t_stop: f64,
    pub steps: usize,
    pub dt_final: f64,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Reusable Strang stepper: caches the linear propagator for the current `dt`.
struct Stepper {
    grid: Arc<Grid>,
    params: ModelParams,
    symbol: Vec<f64>,
    dt: f64,
    propagator: Vec<Complex64>,
}

impl Stepper {
    fn new(grid: &Arc<Grid>, params: &ModelParams, dt: f64) -> Stepper {
        let symbol: Vec<f64> = grid.k_norm_sq().iter().map(|&k| k.powf(params.s)).collect();
        let mut st = Stepper {
            grid: Arc::clone(grid),
            params: *params,
            symbol,
            dt: f64::NAN,
            propagator: Vec::new(),
        };
        st.set_dt(dt);
        st
    }

    fn set_dt(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        let scale = 1.0 / self.grid.len() as f64;
        self.propagator = self
            .symbol
            .iter()
            .map(|&w| Complex64::from_polar(scale, -w * dt))
            .collect();
        self.dt = dt;
    }

    fn nonlinear(&self, u: &mut [Complex64], h: f64) -> Result<()> {
        let ModelParams {
            p1, p2, lambda1, lambda2, ..
        } = self.params;
        if lambda1 == 0.0 && lambda2 == 0.0 {
            return Ok(());
        }
        for v in u.iter_mut() {
            let a2 = v.norm_sqr();
            let phase = h * (lambda1 * a2.powf(p1) + lambda2 * a2.powf(p2));
            if !phase.is_finite() {
                return Err(Error::BlowupSignal(format!(
                    "nonlinear phase overflow at |u| = {:e}",
                    a2.sqrt()
                )));
            }
            *v *= Complex64::from_polar(1.0, phase);
        }
        Ok(())
    }

    fn step(&self, u: &mut [Complex64]) -> Result<()> {
        self.nonlinear(u, 0.5 * self.dt)?;
        self.grid.fft_forward(u);
        for (v, p) in u.iter_mut().zip(&self.propagator) {
            *v *= p;
        }
        self.grid.fft_inverse(u);
        self.nonlinear(u, 0.5 * self.dt)
    }
}

/// One Strang step: half nonlinear phase, exact linear flow, half nonlinear phase.
pub fn step_strang(f: &Field, dt: f64, params: &ModelParams) -> Result<Field> {
    f.ensure_finite()?;
    if !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be finite, got {dt}")));
    }
    let st = Stepper::new(f.grid(), params, dt);
    let mut u = f.values().to_vec();
    st.step(&mut u)?;
    Field::new(Arc::clone(f.grid()), u)
}

fn hs_of(grid: &Grid, u: &[Complex64], symbol: &[f64]) -> f64 {
    let mut spec = u.to_vec();
    grid.fft_forward(&mut spec);
    let sum: f64 = spec.iter().zip(symbol).map(|(c, &w)| w * c.norm_sqr()).sum();
    (sum * grid.cell_volume() / grid.len() as f64).sqrt()
}

fn diagnose(
    t: f64,
    f: &Field,
    params: &ModelParams,
    config: &SimConfig,
    weight: Option<&VirialWeight>,
) -> Result<DiagnosticsRecord> {
    let parts = EnergyParts::of(f, params);
    let hs = parts.hs_sq.sqrt();
    let virial = weight.map(|w| localized_virial(f, w)).transpose()?;
    let g = f.grid();
    let conc_mass = match config.concentration {
        None => None,
        Some(ConcentrationWindow::Fixed(a)) => Some(concentration_mass(f, a.min(g.half_length()))?.window_mass),
        Some(ConcentrationWindow::Rate(delta)) => {
            let a = hs.powf(-(1.0 / params.s - delta));
            let a = if a.is_finite() { a } else { g.half_length() };
            let a = a.clamp(2.0 * g.dx(), g.half_length());
            Some(concentration_mass(f, a)?.window_mass)
        }
    };
    Ok(DiagnosticsRecord {
        t,
        mass: f.mass(),
        energy: parts.total(params),
        hs,
        lp1: parts.lp1,
        lp2: parts.lp2,
        virial,
        conc_mass,
    })
}

/// Advances `u0` until `t_end` or a stop condition fires.
pub fn run(
    u0: &Field,
    params: &ModelParams,
    config: &SimConfig,
    weight: Option<&VirialWeight>,
) -> Result<TrajectoryResult> {
    params.validate()?;
    config.validate()?;
    u0.ensure_finite()?;
    if let Some(w) = weight {
        u0.check_same_grid(&w.phi)?;
    }
    let grid = Arc::clone(u0.grid());
    let mut stepper = Stepper::new(&grid, params, config.dt);
    let mut u = u0.values().to_vec();
    let mass0 = u0.mass();
    let hs0 = hs_of(&grid, &u, &stepper.symbol);
    let mut next_doubling = 2.0 * hs0;
    let mut dt = config.dt;

    let mut diagnostics = vec![diagnose(0.0, u0, params, config, weight)?];
    let mut snapshots = Vec::new();
    if config.snapshot_every > 0 {
        snapshots.push(Snapshot {
            field: u0.clone(),
            time: 0.0,
            ground_state: None,
        });
    }

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut stop = StopReason::ReachedTEnd;
    let mut detail = String::from("reached t_end");
    let t_tol = 1e-12 * config.t_end;
    while t < config.t_end - t_tol {
        let h = dt.min(config.t_end - t);
        stepper.set_dt(h);
        let mut next = u.clone();
        if let Err(e) = stepper.step(&mut next) {
            stop = StopReason::GradientBlowupStop;
            detail = e.to_string();
            break;
        }
        if next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            stop = StopReason::GradientBlowupStop;
            detail = "non-finite samples after step".into();
            break;
        }
        u = next;
        t += h;
        steps += 1;

        let mass = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume();
        let hs = hs_of(&grid, &u, &stepper.symbol);
        let drift = ((mass - mass0) / mass0).abs();
        let mut halt = None;
        if drift > config.stop_mass_drift {
            halt = Some((
                StopReason::MassDriftAbort,
                format!("relative mass drift {drift:e} exceeds {:e}", config.stop_mass_drift),
            ));
        } else if hs > config.stop_gradient_factor * hs0 {
            halt = Some((
                StopReason::GradientBlowupStop,
                format!("Hs norm grew by {:.3}x", hs / hs0),
            ));
        } else if config.adapt {
            while hs > next_doubling {
                dt /= config.adapt_factor;
                next_doubling *= 2.0;
            }
            if dt < config.dt_min {
                halt = Some((
                    StopReason::GradientBlowupStop,
                    format!("time step {dt:e} fell below dt_min at Hs growth {:.3}x", hs / hs0),
                ));
            }
        }

        let last = halt.is_some() || t >= config.t_end - t_tol;
        if steps % config.diag_every == 0 || last {
            let f = Field::new(Arc::clone(&grid), u.clone())?;
            diagnostics.push(diagnose(t, &f, params, config, weight)?);
        }
        if config.snapshot_every > 0 && (steps % config.snapshot_every == 0 || last) {
            snapshots.push(Snapshot {
                field: Field::new(Arc::clone(&grid), u.clone())?,
                time: t,
                ground_state: None,
            });
        }
        if let Some((reason, why)) = halt {
            stop = reason;
            detail = why;
            break;
        }
    }

    Ok(TrajectoryResult {
        params: *params,
        config: config.clone(),
        final_field: Field::new(grid, u)?,
        stop_reason: stop,
        stop_detail: detail,
        t_stop: t,
        steps,
        dt_final: dt,
        diagnostics,
        snapshots,
    })
}

/// Fraction of spectral energy beyond two thirds of the largest wavenumber.
pub fn spectral_tail_fraction(f: &Field) -> f64 {
    let g = f.grid();
    let kmax = g.wavenumbers().iter().fold(0.0f64, |a, &k| a.max(k.abs()));
    let cut = (2.0 / 3.0 * kmax).powi(2);
    let mut tail = 0.0;
    let mut total = 0.0;
    let mut idx = [0usize; 3];
    let ks = g.wavenumbers();
    for (flat, c) in f.spectrum().iter().enumerate() {
        g.unravel(flat, &mut idx[..g.dim()]);
        let e = c.norm_sqr();
        total += e;
        if idx[..g.dim()].iter().any(|&j| ks[j] * ks[j] > cut) {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// A snapshot counts as resolved when its spectral tail fraction is at most this.
pub const RESOLVED_TAIL: f64 = 1e-4;
