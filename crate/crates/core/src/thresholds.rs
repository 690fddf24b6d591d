//! Sharp threshold curves and hypothesis matching for blow-up versus global existence.
//!
//! Throughout, `m` is the L^2 norm `||u0||_{L^2}` (not its square) and `C1`, `C2`
//! are the sharp Gagliardo-Nirenberg constants for `p1` and `p2`.

use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::blowup::{orbit_fit, OrbitFit};
use crate::error::{Error, Result};
use crate::ground_state::{find, GroundState};
use crate::spectral::{energy, hs_seminorm, lq_power, Field, ModelParams};

const SLACK: f64 = 1e-12;

/// `a < b` with a relative margin, so ties within rounding do not count as strict.
fn strictly_less(a: f64, b: f64) -> bool {
    a < b - SLACK * a.abs().max(b.abs())
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= SLACK * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `l1 = l2 = 1`, `p1 = 2s/N`.
    MassCriticalP1Critical,
    /// `l1 = l2 = 1`, `p1 > 2s/N`.
    SupercriticalBoth,
    /// `l1 = -1`, `l2 = 1`, `p1 < 2s/N = p2`.
    SharpMass,
    /// `l2 > 0`, `2s/N < p2 < 2s`: the negative-energy criteria.
    EnergyCriterion,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::MassCriticalP1Critical => "MassCritical_p1Critical",
            Regime::SupercriticalBoth => "Supercritical_both",
            Regime::SharpMass => "SharpMass",
            Regime::EnergyCriterion => "EnergyCriterion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    GlobalExistence,
    FiniteTimeBlowupCandidate,
    InfiniteTimeGrowthCandidate,
    Undetermined,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::GlobalExistence => "GlobalExistence",
            Classification::FiniteTimeBlowupCandidate => "FiniteTimeBlowupCandidate",
            Classification::InfiniteTimeGrowthCandidate => "InfiniteTimeGrowthCandidate",
            Classification::Undetermined => "Undetermined",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Overrides the derived constant in `E + C M < 0`.
    pub case3_constant: Option<f64>,
    /// Relative L^2 distance below which data count as `c rho^{N/2} Q(rho x)`.
    pub orbit_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            case3_constant: None,
            orbit_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub regime: Option<Regime>,
    /// Short tag naming the hypothesis that fired.
    pub rule: Option<&'static str>,
    pub classification: Classification,
    pub mass: f64,
    pub l2_norm: f64,
    pub energy: f64,
    pub hs: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub y0: Option<f64>,
    pub h_at_y0: Option<f64>,
    pub y1: Option<f64>,
    pub g_at_y1: Option<f64>,
    pub energy_threshold: Option<f64>,
    pub case3_constant: Option<f64>,
    pub case3_constant_configured: bool,
    pub orbit: Option<OrbitFit>,
    pub notes: Vec<String>,
}

impl ThresholdReport {
    fn new(mass: f64, energy: f64, hs: f64) -> Self {
        ThresholdReport {
            regime: None,
            rule: None,
            classification: Classification::Undetermined,
            mass,
            l2_norm: mass.sqrt(),
            energy,
            hs,
            c1: None,
            c2: None,
            y0: None,
            h_at_y0: None,
            y1: None,
            g_at_y1: None,
            energy_threshold: None,
            case3_constant: None,
            case3_constant_configured: false,
            orbit: None,
            notes: Vec::new(),
        }
    }

    fn fire(&mut self, regime: Regime, rule: &'static str, c: Classification) {
        self.regime = Some(regime);
        self.rule = Some(rule);
        self.classification = c;
    }

    pub const CSV_HEADER: &'static str = "regime,rule,classification,mass,l2_norm,energy,hs,c1,c2,y0,h_at_y0,y1,g_at_y1,energy_threshold,case3_constant,orbit_c,orbit_rho,orbit_dist";

    pub fn csv_row(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        [
            self.regime.map(|r| r.as_str().to_string()).unwrap_or_default(),
            self.rule.unwrap_or("").to_string(),
            self.classification.to_string(),
            o(Some(self.mass)),
            o(Some(self.l2_norm)),
            o(Some(self.energy)),
            o(Some(self.hs)),
            o(self.c1),
            o(self.c2),
            o(self.y0),
            o(self.h_at_y0),
            o(self.y1),
            o(self.g_at_y1),
            o(self.energy_threshold),
            o(self.case3_constant),
            o(self.orbit.as_ref().map(|f| f.c_abs)),
            o(self.orbit.as_ref().map(|f| f.rho)),
            o(self.orbit.as_ref().map(|f| f.rel_l2_dist)),
        ]
        .join(",")
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        kv("regime", self.regime.map(|r| r.as_str()).unwrap_or("none").into());
        kv("rule", self.rule.unwrap_or("none").into());
        kv("classification", self.classification.to_string());
        kv("mass", format!("{:.17e}", self.mass));
        kv("l2_norm", format!("{:.17e}", self.l2_norm));
        kv("energy", format!("{:.17e}", self.energy));
        kv("hs", format!("{:.17e}", self.hs));
        let opt = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("y0", self.y0),
            ("h_at_y0", self.h_at_y0),
            ("y1", self.y1),
            ("g_at_y1", self.g_at_y1),
            ("energy_threshold", self.energy_threshold),
            ("case3_constant", self.case3_constant),
        ];
        for (k, v) in opt {
            if let Some(v) = v {
                kv(k, format!("{v:.17e}"));
            }
        }
        if self.case3_constant.is_some() {
            let src = if self.case3_constant_configured { "configured" } else { "derived" };
            kv("case3_constant_source", src.into());
        }
        if let Some(f) = &self.orbit {
            kv("orbit_c", format!("{:.17e}", f.c_abs));
            kv("orbit_rho", format!("{:.17e}", f.rho));
            kv("orbit_dist", format!("{:.6e}", f.rel_l2_dist));
        }
        for n in &self.notes {
            kv("note", n.clone());
        }
        out
    }
}

fn check_y(y: f64) -> Result<()> {
    if y >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold curves need y >= 0, got {y}")))
    }
}

/// Exponents `(2p+2) - pN/s` and `pN/s` attached to the mass and gradient.
fn exps(p: f64, params: &ModelParams) -> (f64, f64) {
    let e = p * params.dim as f64 / params.s;
    (2.0 * p + 2.0 - e, e)
}

pub fn h_curve(y: f64, m: f64, c1: f64, c2: f64, params: &ModelParams) -> Result<f64> {
    check_y(y)?;
    let (em2, ey2) = exps(params.p2, params);
    Ok(0.5 * y * y
        - c1 / (2.0 * params.p1 + 2.0) * m.powf(2.0 * params.p1) * y * y
        - c2 / (2.0 * params.p2 + 2.0) * m.powf(em2) * y.powf(ey2))
}

pub fn h_prime(y: f64, m: f64, c1: f64, c2: f64, params: &ModelParams) -> f64 {
    let (em2, ey2) = exps(params.p2, params);
    y * (1.0 - c1 * m.powf(2.0 * params.p1) / (params.p1 + 1.0))
        - ey2 * c2 / (2.0 * params.p2 + 2.0) * m.powf(em2) * y.powf(ey2 - 1.0)
}

/// The unique positive critical point of `h`.
pub fn y0_root(m: f64, c1: f64, c2: f64, params: &ModelParams) -> Result<f64> {
    let (em2, ey2) = exps(params.p2, params);
    let num = 1.0 - c1 * m.powf(2.0 * params.p1) / (params.p1 + 1.0);
    if !(num > 0.0) {
        return Err(Error::Precondition(format!(
            "1 - C1 m^(2p1)/(p1+1) = {num} is not positive; data at or above the critical mass"
        )));
    }
    let den = ey2 * c2 / (2.0 * params.p2 + 2.0) * m.powf(em2);
    if !(den > 0.0) || !(ey2 > 2.0) {
        return Err(Error::Precondition(
            "h has no interior maximum (need m > 0, C2 > 0 and p2 N > 2s)".into(),
        ));
    }
    Ok((num / den).powf(1.0 / (ey2 - 2.0)))
}

pub fn f_curve(y: f64, m: f64, c1: f64, c2: f64, params: &ModelParams) -> Result<f64> {
    check_y(y)?;
    let (em1, ey1) = exps(params.p1, params);
    let (em2, ey2) = exps(params.p2, params);
    Ok(1.0
        - c1 / (2.0 * params.p1 + 2.0) * ey1 * m.powf(em1) * y.powf(ey1 - 2.0)
        - c2 / (2.0 * params.p2 + 2.0) * ey2 * m.powf(em2) * y.powf(ey2 - 2.0))
}

/// `g(y) = y^2/2 - C1/(2p1+2) m^.. y^{p1 N/s} - C2/(2p2+2) m^.. y^{p2 N/s}`, with `g' = y f`.
pub fn g_curve(y: f64, m: f64, c1: f64, c2: f64, params: &ModelParams) -> Result<f64> {
    check_y(y)?;
    let (em1, ey1) = exps(params.p1, params);
    let (em2, ey2) = exps(params.p2, params);
    Ok(0.5 * y * y
        - c1 / (2.0 * params.p1 + 2.0) * m.powf(em1) * y.powf(ey1)
        - c2 / (2.0 * params.p2 + 2.0) * m.powf(em2) * y.powf(ey2))
}

/// Positive zero of `f` by doubling then bisection.
pub fn y1_root(m: f64, c1: f64, c2: f64, params: &ModelParams) -> Result<f64> {
    let f = |y: f64| f_curve(y, m, c1, c2, params);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 2f64.powi(60) {
            return Err(Error::BracketOverflow(format!(
                "f stays positive up to y = 2^60 (m = {m}, C1 = {c1}, C2 = {c2})"
            )));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo)?.abs() <= f(hi)?.abs() { lo } else { hi })
}

/// Energy of `c rho^{N/2} Q(rho x)` through the Pohozaev identities, for
/// `l1 = -1`, `l2 = 1` and `Q` the ground state of the critical power `p2`.
pub fn scaled_data_energy(c: Complex64, rho: f64, gs: &GroundState, params: &ModelParams) -> f64 {
    let a = c.norm();
    let lp1 = lq_power(&gs.profile, 2.0 * params.p1 + 2.0).unwrap_or(f64::NAN);
    let n = params.dim as f64;
    -(a * a * rho.powf(2.0 * params.s) / 2.0) * (a.powf(2.0 * params.p2) - 1.0) * gs.grad_sq
        + a.powf(2.0 * params.p1 + 2.0) * rho.powf(n * params.p1) / (2.0 * params.p1 + 2.0) * lp1
}

/// The `rho` above which `scaled_data_energy` is negative (`|c| > 1`).
pub fn negative_energy_rho(c_abs: f64, gs: &GroundState, params: &ModelParams) -> Result<f64> {
    if !(c_abs > 1.0) {
        return Err(Error::Precondition(format!("need |c| > 1, got {c_abs}")));
    }
    let lp1 = lq_power(&gs.profile, 2.0 * params.p1 + 2.0)?;
    let expo = 2.0 * params.s - params.dim as f64 * params.p1;
    if !(expo > 0.0) {
        return Err(Error::Precondition("need p1 < 2s/N".into()));
    }
    let rhs = c_abs.powf(2.0 * params.p1) * lp1
        / ((params.p1 + 1.0) * (c_abs.powf(2.0 * params.p2) - 1.0) * gs.grad_sq);
    Ok(rhs.powf(1.0 / expo))
}

/// Default constant for the `E + C M < 0` criterion: the chain
/// `C = C(delta) l1 (p2 - p1) / (2 p2 (p1 + 1))` with `theta` at the midpoint of its
/// admissible interval, `delta` at its upper bound and `C(delta)` the optimal
/// constant in `a^{2p1+2} <= C(delta) a^2 + delta a^{2p2+2}`.
pub fn default_case3_constant(params: &ModelParams) -> f64 {
    let ModelParams {
        s, dim, p1, p2, lambda1, lambda2, ..
    } = *params;
    let n = dim as f64;
    let theta = (p2 * n + 2.0 * s) / (2.0 * p2 * n);
    let delta = lambda2 * p2 * (1.0 - theta) * (p1 + 1.0) / (theta * lambda1 * (p2 - p1) * (p2 + 1.0));
    let b = (p1 / (delta * p2)).powf(1.0 / (p2 - p1));
    let c_delta = b.powf(p1) * (1.0 - p1 / p2);
    c_delta * lambda1 * (p2 - p1) / (2.0 * p2 * (p1 + 1.0))
}

pub fn classify(u0: &Field, params: &ModelParams, library: &[GroundState]) -> Result<ThresholdReport> {
    classify_with(u0, params, library, &ClassifyOptions::default())
}

pub fn classify_with(
    u0: &Field,
    params: &ModelParams,
    library: &[GroundState],
    opts: &ClassifyOptions,
) -> Result<ThresholdReport> {
    params.validate()?;
    if u0.grid().dim() != params.dim {
        return Err(Error::InvalidField(format!(
            "data are {}-dimensional, model is {}-dimensional",
            u0.grid().dim(),
            params.dim
        )));
    }
    let mass = u0.mass();
    let e = energy(u0, params)?;
    let hs = hs_seminorm(u0, params.s)?;
    let mut rep = ThresholdReport::new(mass, e, hs);
    rep.notes.push("advisory: radial H^{2s} regularity of the data is not verified".into());

    if !params.in_threshold_setting() {
        rep.notes
            .push("outside the threshold setting (need N >= 2 and 1/2 < s < 1)".into());
        return Ok(rep);
    }

    let ModelParams {
        s, dim, p1, p2, lambda1, lambda2, ..
    } = *params;
    let n = dim as f64;
    let pc = params.critical_p();
    let m = mass.sqrt();

    if lambda1 == -1.0 && lambda2 == 1.0 && strictly_less(p1, pc) && same(p2, pc) {
        let q = find(library, s, dim, p2)?;
        if strictly_less(mass, q.mass_sq) {
            rep.fire(Regime::SharpMass, "below-ground-state-mass", Classification::GlobalExistence);
            return Ok(rep);
        }
        let fit = orbit_fit(u0, q)?;
        let on_orbit = fit.rel_l2_dist <= opts.orbit_tol && fit.c_abs >= 1.0 - SLACK;
        rep.orbit = Some(fit);
        if on_orbit {
            let c = if e < 0.0 {
                Classification::FiniteTimeBlowupCandidate
            } else {
                Classification::InfiniteTimeGrowthCandidate
            };
            rep.fire(Regime::SharpMass, "ground-state-orbit", c);
        } else {
            rep.regime = Some(Regime::SharpMass);
            rep.notes.push("mass at or above ||Q||^2 and data off the ground-state orbit".into());
        }
        return Ok(rep);
    }

    let below_energy_critical = n <= 2.0 * s || p2 < 2.0 * s / (n - 2.0 * s);
    if lambda1 == 1.0
        && lambda2 == 1.0
        && !strictly_less(p1, pc)
        && p1 < p2
        && below_energy_critical
        && p2 < 2.0 * s
    {
        let q2 = find(library, s, dim, p2)?;
        let c2 = q2.c_opt;
        rep.c2 = Some(c2);
        if same(p1, pc) {
            let q1 = find(library, s, dim, p1)?;
            let c1 = q1.c_opt;
            rep.c1 = Some(c1);
            rep.regime = Some(Regime::MassCriticalP1Critical);
            if strictly_less(mass, q1.mass_sq) {
                let y0 = y0_root(m, c1, c2, params)?;
                let h0 = h_curve(y0, m, c1, c2, params)?;
                rep.y0 = Some(y0);
                rep.h_at_y0 = Some(h0);
                rep.energy_threshold = Some(h0);
                if strictly_less(e, h0) {
                    if strictly_less(hs, y0) {
                        rep.fire(rep.regime.unwrap(), "below-y0", Classification::GlobalExistence);
                        return Ok(rep);
                    }
                    if strictly_less(y0, hs) {
                        rep.fire(
                            rep.regime.unwrap(),
                            "above-y0",
                            Classification::FiniteTimeBlowupCandidate,
                        );
                        return Ok(rep);
                    }
                }
            }
        } else {
            let q1 = find(library, s, dim, p1)?;
            let c1 = q1.c_opt;
            rep.c1 = Some(c1);
            rep.regime = Some(Regime::SupercriticalBoth);
            let y1 = y1_root(m, c1, c2, params)?;
            let thr = (p1 * n - 2.0 * s) / (2.0 * p1 * n) * y1 * y1;
            rep.y1 = Some(y1);
            rep.g_at_y1 = Some(g_curve(y1, m, c1, c2, params)?);
            rep.energy_threshold = Some(thr);
            if strictly_less(e, thr) {
                if strictly_less(hs, y1) {
                    rep.fire(rep.regime.unwrap(), "below-y1", Classification::GlobalExistence);
                    return Ok(rep);
                }
                if strictly_less(y1, hs) {
                    rep.fire(
                        rep.regime.unwrap(),
                        "above-y1",
                        Classification::FiniteTimeBlowupCandidate,
                    );
                    return Ok(rep);
                }
            }
        }
    }

    if lambda2 > 0.0 && strictly_less(pc, p2) && below_energy_critical && p2 < 2.0 * s {
        if lambda1 > 0.0 && strictly_less(pc, p1) && e < 0.0 {
            rep.fire(
                Regime::EnergyCriterion,
                "focusing-negative-energy",
                Classification::FiniteTimeBlowupCandidate,
            );
            return Ok(rep);
        }
        if lambda1 < 0.0 && e < 0.0 {
            rep.fire(
                Regime::EnergyCriterion,
                "defocusing-p1-negative-energy",
                Classification::FiniteTimeBlowupCandidate,
            );
            return Ok(rep);
        }
        if lambda1 > 0.0 && !strictly_less(pc, p1) {
            let c = opts.case3_constant.unwrap_or_else(|| default_case3_constant(params));
            rep.case3_constant = Some(c);
            rep.case3_constant_configured = opts.case3_constant.is_some();
            if e + c * mass < 0.0 {
                rep.fire(
                    Regime::EnergyCriterion,
                    "energy-plus-mass-negative",
                    Classification::FiniteTimeBlowupCandidate,
                );
                return Ok(rep);
            }
        }
        if rep.regime.is_none() {
            rep.regime = Some(Regime::EnergyCriterion);
        }
    }
    Ok(rep)
}
