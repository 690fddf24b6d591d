//! Ground states of `(-Delta)^s Q + Q = |Q|^{2p} Q` and the sharp
//! Gagliardo-Nirenberg constant they determine.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::snapshot::{self, GroundStateHeader};
use crate::spectral::{
    energy_critical_exponent, hs_seminorm_sq_unchecked, lq_power_unchecked, Field, Grid,
};

/// Knobs for the stabilized fixed-point iteration.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial guess is `amplitude * exp(-|x|^2 / width^2)`.
    pub width: f64,
    pub amplitude: f64,
    /// Average over the grid's reflection/permutation group every
    /// `symmetrize_every` iterations (N >= 2 only).
    pub symmetrize: bool,
    pub symmetrize_every: usize,
    pub max_retries: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 5000,
            width: 1.0,
            amplitude: 1.0,
            symmetrize: true,
            symmetrize_every: 20,
            max_retries: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub profile: Field,
    pub s: f64,
    pub dim: usize,
    pub p: f64,
    pub mass_sq: f64,
    pub grad_sq: f64,
    pub lp_power: f64,
    pub c_opt: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Residuals of the last (up to ten) iterations, oldest first.
    pub residual_tail: Vec<f64>,
}

impl GroundState {
    fn from_profile(profile: Field, s: f64, p: f64, residual: f64) -> GroundState {
        let dim = profile.grid().dim();
        let mass_sq = profile.mass();
        let grad_sq = hs_seminorm_sq_unchecked(&profile, s);
        let lp_power = lq_power_unchecked(&profile, 2.0 * p + 2.0);
        let c_opt = sharp_constant_from_mass(s, dim, p, mass_sq);
        GroundState {
            profile,
            s,
            dim,
            p,
            mass_sq,
            grad_sq,
            lp_power,
            c_opt,
            residual,
            iterations: 0,
            residual_tail: Vec::new(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass_sq.sqrt()
    }

    /// `||(-Delta)^{s/2} Q||_{L^2}`.
    pub fn hs(&self) -> f64 {
        self.grad_sq.sqrt()
    }

    /// Expected `grad_sq / mass_sq` and `lp_power / mass_sq` from the Pohozaev identities.
    pub fn expected_ratios(&self) -> (f64, f64) {
        let pn = self.p * self.dim as f64;
        let d = 2.0 * self.s * (self.p + 1.0) - pn;
        (pn / d, 2.0 * self.s * (self.p + 1.0) / d)
    }

    /// Relative errors of the two Pohozaev ratios.
    pub fn relation_errors(&self) -> (f64, f64) {
        let (g, l) = self.expected_ratios();
        (
            (self.grad_sq / self.mass_sq / g - 1.0).abs(),
            (self.lp_power / self.mass_sq / l - 1.0).abs(),
        )
    }

    pub fn matches(&self, s: f64, dim: usize, p: f64) -> bool {
        self.dim == dim && close(self.s, s) && close(self.p, p)
    }

    pub fn certificate_csv(&self) -> String {
        let (e23, e24) = self.relation_errors();
        let mut out = String::from("s,dim,p,mass_sq,grad_sq,lp_power,c_opt,residual,rel_err_grad,rel_err_lp\n");
        writeln!(
            out,
            "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.6e},{:.6e},{:.6e}",
            self.s,
            self.dim,
            self.p,
            self.mass_sq,
            self.grad_sq,
            self.lp_power,
            self.c_opt,
            self.residual,
            e23,
            e24
        )
        .unwrap();
        out
    }

    pub fn file_stem(&self) -> String {
        file_stem(self.s, self.dim, self.p)
    }

    /// Writes `<stem>.bin` and `<stem>.csv` into `dir`; returns the binary path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bin = dir.join(format!("{}.bin", self.file_stem()));
        let header = GroundStateHeader {
            s: self.s,
            p: self.p,
            c_opt: self.c_opt,
            residual: self.residual,
        };
        snapshot::write(&bin, &self.profile, 0.0, Some(&header))?;
        let csv = dir.join(format!("{}.csv", self.file_stem()));
        std::fs::write(&csv, self.certificate_csv()).map_err(|e| Error::io(&csv, e))?;
        Ok(bin)
    }

    pub fn load(path: &Path) -> Result<GroundState> {
        let snap = snapshot::read(path)?;
        let h = snap.ground_state.ok_or_else(|| {
            Error::Format(format!("{} is a plain snapshot, not a ground state", path.display()))
        })?;
        let gs = GroundState::from_profile(snap.field, h.s, h.p, h.residual);
        if !close(gs.c_opt, h.c_opt) {
            return Err(Error::GroundStateMismatch(format!(
                "{}: stored C_opt {} disagrees with profile ({})",
                path.display(),
                h.c_opt,
                gs.c_opt
            )));
        }
        Ok(gs)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn file_stem(s: f64, dim: usize, p: f64) -> String {
    format!("gs_s{s}_N{dim}_p{p}")
}

/// Every ground state (`*.bin`) in `dir`, sorted by file name.
pub fn load_library(dir: &Path) -> Result<Vec<GroundState>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    paths.sort();
    paths.iter().map(|p| GroundState::load(p)).collect()
}

pub fn find<'a>(library: &'a [GroundState], s: f64, dim: usize, p: f64) -> Result<&'a GroundState> {
    library
        .iter()
        .find(|g| g.matches(s, dim, p))
        .ok_or(Error::MissingGroundState { s, dim, p })
}

pub fn solve_ground_state(
    s: f64,
    dim: usize,
    p: f64,
    grid: &Arc<Grid>,
    tol: f64,
    max_iter: usize,
) -> Result<GroundState> {
    let opts = SolverOptions {
        tol,
        max_iter,
        ..SolverOptions::default()
    };
    solve_with(s, p, grid, &opts).and_then(|gs| {
        if gs.dim == dim {
            Ok(gs)
        } else {
            Err(Error::Geometry(format!(
                "grid dimension {} differs from requested {dim}",
                gs.dim
            )))
        }
    })
}

pub fn solve_with(s: f64, p: f64, grid: &Arc<Grid>, opts: &SolverOptions) -> Result<GroundState> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParams(format!("s = {s} outside (0, 1]")));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParams(format!("p = {p} must be positive")));
    }
    if let Some(pmax) = energy_critical_exponent(s, grid.dim()) {
        if p >= pmax {
            return Err(Error::InvalidParams(format!(
                "p = {p} not below the energy-critical bound {pmax}"
            )));
        }
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParams("tol must be positive and max_iter nonzero".into()));
    }

    let factors = [1.0, 2.0, 0.5, 4.0, 0.25];
    let mut last = None;
    for &f in factors.iter().take(opts.max_retries + 1) {
        match iterate(s, p, grid, opts, opts.amplitude * f) {
            Err(e @ Error::Degenerate(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.unwrap_or_else(|| Error::Degenerate("no attempt made".into())))
}

fn iterate(s: f64, p: f64, grid: &Arc<Grid>, opts: &SolverOptions, amplitude: f64) -> Result<GroundState> {
    let len = grid.len();
    let lop: Vec<f64> = grid.k_norm_sq().iter().map(|&k| k.powf(s) + 1.0).collect();
    let alpha = (2.0 * p + 1.0) / (2.0 * p);
    let w2 = opts.width * opts.width;
    let mut q: Vec<f64> = grid
        .positions()
        .iter()
        .map(|x| amplitude * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / w2).exp())
        .collect();

    let mut tail: Vec<f64> = Vec::with_capacity(10);
    let mut qh = vec![Complex64::new(0.0, 0.0); len];
    let mut nh = vec![Complex64::new(0.0, 0.0); len];
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iter {
        for (c, &v) in qh.iter_mut().zip(&q) {
            *c = Complex64::new(v, 0.0);
        }
        grid.fft_forward(&mut qh);
        for (c, &v) in nh.iter_mut().zip(&q) {
            *c = Complex64::new(v.powf(2.0 * p + 1.0), 0.0);
        }
        grid.fft_forward(&mut nh);

        let mut num = 0.0;
        let mut den = 0.0;
        let mut r2 = 0.0;
        let mut q2 = 0.0;
        for i in 0..len {
            let a = qh[i];
            let b = nh[i];
            num += lop[i] * a.norm_sqr();
            den += (a.conj() * b).re;
            r2 += (a * lop[i] - b).norm_sqr();
            q2 += a.norm_sqr();
        }
        residual = (r2 / q2).sqrt();
        if !residual.is_finite() || !(den > 0.0) || q2 < 1e-300 {
            return Err(Error::Degenerate(format!(
                "iterate collapsed or diverged at step {it} (initial amplitude {amplitude})"
            )));
        }
        if tail.len() == 10 {
            tail.remove(0);
        }
        tail.push(residual);
        if residual <= opts.tol {
            let profile = Field::new(
                Arc::clone(grid),
                q.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            )?;
            let mut gs = GroundState::from_profile(profile, s, p, residual);
            gs.iterations = it;
            gs.residual_tail = tail;
            return Ok(gs);
        }

        let scale = (num / den).powf(alpha) / len as f64;
        for i in 0..len {
            nh[i] *= scale / lop[i];
        }
        grid.fft_inverse(&mut nh);
        for (v, c) in q.iter_mut().zip(&nh) {
            *v = c.re.abs();
        }
        if q.iter().all(|&v| v < 1e-150) {
            return Err(Error::Degenerate(format!(
                "iterate vanished at step {it} (initial amplitude {amplitude})"
            )));
        }
        if opts.symmetrize && grid.dim() >= 2 && (it + 1) % opts.symmetrize_every.max(1) == 0 {
            q = symmetrize(grid, &q);
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Average over reflections `j -> n - j` and axis permutations about the box center.
fn symmetrize(grid: &Grid, q: &[f64]) -> Vec<f64> {
    let dim = grid.dim();
    let n = grid.n();
    let perms: &[&[usize]] = match dim {
        2 => &[&[0, 1], &[1, 0]],
        _ => &[&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]],
    };
    let group = perms.len() << dim;
    let mut out = vec![0.0; q.len()];
    let mut idx = [0usize; 3];
    let mut img = [0usize; 3];
    for (flat, o) in out.iter_mut().enumerate() {
        grid.unravel(flat, &mut idx[..dim]);
        let mut acc = 0.0;
        for perm in perms {
            for mask in 0..(1usize << dim) {
                for a in 0..dim {
                    let j = idx[perm[a]];
                    img[a] = if mask >> a & 1 == 1 { (n - j) % n } else { j };
                }
                acc += q[grid.ravel(&img[..dim])];
            }
        }
        *o = acc / group as f64;
    }
    out
}

/// The sharp constant computed from `||Q||_{L^2}^2`.
pub fn sharp_constant_from_mass(s: f64, dim: usize, p: f64, mass_sq: f64) -> f64 {
    let pn = p * dim as f64;
    if (pn - 2.0 * s).abs() <= 1e-12 * 2.0 * s {
        return (p + 1.0) / mass_sq.powf(p);
    }
    general_sharp_constant(s, dim, p, mass_sq)
}

pub(crate) fn general_sharp_constant(s: f64, dim: usize, p: f64, mass_sq: f64) -> f64 {
    let pn = p * dim as f64;
    let d = 2.0 * s * (p + 1.0) - pn;
    (d / pn).powf(pn / (2.0 * s)) * 2.0 * s * (p + 1.0) / (d * mass_sq.powf(p))
}

pub fn sharp_constant(gs: &GroundState) -> f64 {
    sharp_constant_from_mass(gs.s, gs.dim, gs.p, gs.mass_sq)
}

/// `||f||_{2p+2}^{2p+2} / (||(-Delta)^{s/2} f||^{pN/s} ||f||_2^{2p+2-pN/s})`.
pub fn gn_quotient(f: &Field, s: f64, p: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) || !(p > 0.0) {
        return Err(Error::Domain(format!("need s in (0, 1] and p > 0, got s = {s}, p = {p}")));
    }
    f.ensure_finite()?;
    let mass = f.mass();
    let hs = hs_seminorm_sq_unchecked(f, s).sqrt();
    if mass == 0.0 || hs == 0.0 {
        return Err(Error::Domain(
            "Gagliardo-Nirenberg quotient undefined for zero or constant fields".into(),
        ));
    }
    let e = p * f.grid().dim() as f64 / s;
    let lp = lq_power_unchecked(f, 2.0 * p + 2.0);
    Ok(lp / (hs.powf(e) * mass.sqrt().powf(2.0 * p + 2.0 - e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nls_1d() -> GroundState {
        let g = Grid::new(1, 256, 20.0).unwrap();
        solve_ground_state(1.0, 1, 1.0, &g, 1e-10, 5000).unwrap()
    }

    #[test]
    fn cubic_soliton_in_one_dimension() {
        let gs = nls_1d();
        assert!(gs.residual <= 1e-10);
        assert!((gs.mass_sq - 4.0).abs() < 1e-8, "{}", gs.mass_sq);
        let (e1, e2) = gs.relation_errors();
        assert!(e1 < 1e-8 && e2 < 1e-8);
    }

    #[test]
    fn residual_tail_is_nonincreasing() {
        let gs = nls_1d();
        assert!(!gs.residual_tail.is_empty());
        for w in gs.residual_tail.windows(2) {
            assert!(w[1] <= w[0], "{:?}", gs.residual_tail);
        }
    }

    #[test]
    fn critical_formula_is_the_limit_of_the_general_one() {
        for &(s, dim) in &[(0.7, 2usize), (1.0, 1), (0.6, 3)] {
            let p = 2.0 * s / dim as f64;
            let a = general_sharp_constant(s, dim, p, 3.7);
            let b = (p + 1.0) / 3.7f64.powf(p);
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn unreachable_tolerance_reports_convergence_failure() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let err = solve_ground_state(1.0, 1, 1.0, &g, 1e-30, 50).unwrap_err();
        assert!(matches!(err, Error::Convergence { iterations: 50, .. }));
    }

    #[test]
    fn rejects_energy_supercritical_power() {
        let g = Grid::new(2, 16, 5.0).unwrap();
        assert!(solve_ground_state(0.7, 2, 3.0, &g, 1e-10, 10).is_err());
    }

    #[test]
    fn zero_field_has_no_quotient() {
        let g = Grid::new(1, 16, 5.0).unwrap();
        assert!(matches!(gn_quotient(&Field::zeros(g), 0.5, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn persistence_roundtrip() {
        let gs = nls_1d();
        let dir = tempfile::tempdir().unwrap();
        let path = gs.save(dir.path()).unwrap();
        let back = GroundState::load(&path).unwrap();
        assert_eq!(back.profile.values(), gs.profile.values());
        assert_eq!(back.c_opt, gs.c_opt);
        let lib = load_library(dir.path()).unwrap();
        assert!(find(&lib, 1.0, 1, 1.0).is_ok());
        assert!(matches!(
            find(&lib, 0.7, 2, 0.7),
            Err(Error::MissingGroundState { dim: 2, .. })
        ));
    }

    #[test]
    fn symmetrization_fixes_symmetric_fields() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let q: Vec<f64> = g
            .positions()
            .iter()
            .map(|x| (-(x[0] * x[0] + x[1] * x[1])).exp())
            .collect();
        let r = symmetrize(&g, &q);
        for (a, b) in q.iter().zip(&r) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
