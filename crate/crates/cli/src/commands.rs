use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracollapse::blowup::{self, ProfileDistance};
use fracollapse::dynamics::{self, DiagnosticsRecord, SimConfig, StopReason, TrajectoryResult};
use fracollapse::ground_state::{self, GroundState};
use fracollapse::snapshot::{self, Snapshot};
use fracollapse::thresholds::{self, ThresholdReport};
use fracollapse::virial::make_weight;
use fracollapse::{Error, Field, Grid, ModelParams};
use num_complex::Complex64;

use crate::config::{Config, HalfLength, InitialKind, ModelSpec, Rho};
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::plot::Plot;
use crate::pool;

pub struct Context {
    pub config: PathBuf,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Context {
    fn load(&self) -> Result<Config> {
        if self.jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        Config::load(&self.config)
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Ground states in `dir`; a directory that does not exist is an empty library.
fn library(dir: &Path) -> Result<Vec<GroundState>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    Ok(ground_state::load_library(dir)?)
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn ground_state(ctx: &Context) -> Result<()> {
    let cfg = ctx.load()?;
    let grid = cfg.grid()?;
    let half = grid.fixed()?;
    let mut wanted: Vec<(f64, usize, f64)> = Vec::new();
    for m in &cfg.models {
        for p in m.ground_state_powers()? {
            if !wanted.contains(&(m.s, m.dim, p)) {
                wanted.push((m.s, m.dim, p));
            }
        }
    }
    let opts = cfg.ground_state.options.clone();
    let solved = pool::map(ctx.jobs, &wanted, |_, &(s, dim, p)| {
        let g = Grid::new(dim, grid.n, half)?;
        ground_state::solve_with(s, p, &g, &opts)
    });

    let lib = cfg.library_dir(&ctx.out);
    mkdir(&ctx.out)?;
    let mut manifest = Manifest::new("ground-state");
    manifest.set("config_path", absolute(&cfg.source).display());
    manifest.config(&cfg.echo(&cfg.models[0]));
    let mut failure = None;
    for (&(s, dim, p), res) in wanted.iter().zip(solved) {
        match res {
            Ok(gs) => {
                let bin = gs.save(&lib)?;
                let (e_grad, e_lp) = gs.relation_errors();
                println!("ground state (s = {s}, N = {dim}, p = {p})");
                println!("  iterations={}", gs.iterations);
                println!("  residual={:e}", gs.residual);
                println!("  mass_sq={:.12}", gs.mass_sq);
                println!("  grad_sq={:.12}", gs.grad_sq);
                println!("  c_opt={:.12}", gs.c_opt);
                println!("  rel_err_grad={e_grad:e}");
                println!("  rel_err_lp={e_lp:e}");
                println!("  file={}", bin.display());
                manifest.artifact("ground_state", &ctx.out, &bin);
                manifest.artifact("report", &ctx.out, &bin.with_extension("csv"));
            }
            Err(e) => {
                if let Error::Convergence { iterations, residual } = &e {
                    eprintln!(
                        "ground state (s = {s}, N = {dim}, p = {p}): max_iter = {iterations} reached, residual {residual:e} > tol {:e}",
                        opts.tol
                    );
                }
                failure.get_or_insert(e);
            }
        }
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    manifest.artifact("ground_state_dir", &ctx.out, &lib);
    manifest.write(&ctx.out.join("ground_state_manifest.txt"))
}

/// Initial data for one model; the ground state used, if any, comes back too.
fn initial_data<'a>(
    cfg: &Config,
    params: &ModelParams,
    lib: &'a [GroundState],
) -> Result<(Field, Option<&'a GroundState>)> {
    let init = cfg.initial()?;
    let gspec = cfg.grid()?;
    let fixed_grid = || -> Result<Arc<Grid>> { Ok(Grid::new(params.dim, gspec.n, gspec.fixed()?)?) };
    let (field, used) = match &init.kind {
        InitialKind::Gaussian { amplitude, width } => {
            (dynamics::gaussian(&fixed_grid()?, *amplitude, *width), None)
        }
        InitialKind::Ring {
            amplitude,
            radius,
            width,
            eps,
            mode,
        } => (dynamics::ring(&fixed_grid()?, *amplitude, *radius, *width, *eps, *mode), None),
        InitialKind::GroundState { p, c, phase, rho } => {
            let p = p.unwrap_or(params.p2);
            let gs = ground_state::find(lib, params.s, params.dim, p)?;
            let rho = match rho {
                Rho::Value(v) => *v,
                Rho::NegativeEnergy(f) => f * thresholds::negative_energy_rho(c.abs(), gs, params)?,
            };
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(CliError::Config(format!("[initial] rho must be positive, got {rho}")));
            }
            let half = match gspec.half_length {
                HalfLength::Fixed(l) => l,
                HalfLength::Auto => gs.profile.grid().half_length() / rho,
            };
            let grid = Grid::new(params.dim, gspec.n, half)?;
            let u = dynamics::scaled_ground_state(gs, Complex64::from_polar(*c, *phase), rho, &grid)?;
            (u, Some(gs))
        }
        InitialKind::Snapshot { path } => {
            let snap = snapshot::read(path)?;
            (snap.field, None)
        }
    };
    if field.grid().dim() != params.dim {
        return Err(CliError::Config(format!(
            "initial data are {}-dimensional, model is {}-dimensional",
            field.grid().dim(),
            params.dim
        )));
    }
    let seed = cfg.sim.as_ref().map_or(0, |s| s.seed);
    let field = if init.noise != 0.0 {
        dynamics::perturb(&field, init.noise, seed)
    } else {
        field
    };
    Ok((field, used))
}

pub fn classify(ctx: &Context, data: Option<&Path>) -> Result<()> {
    let cfg = ctx.load()?;
    let lib = library(&cfg.library_dir(&ctx.out))?;
    let given = data.map(snapshot::read).transpose()?;
    let mut csv = format!("model,{}\n", ThresholdReport::CSV_HEADER);
    for m in &cfg.models {
        let params = m.params()?;
        let u0 = match &given {
            Some(snap) => snap.field.clone(),
            None => initial_data(&cfg, &params, &lib)?.0,
        };
        let rep = thresholds::classify_with(&u0, &params, &lib, &cfg.classify)?;
        println!("model={}", m.index);
        print!("{}", rep.to_key_value());
        writeln!(csv, "{},{}", m.index, rep.csv_row()).unwrap();
    }
    mkdir(&ctx.out)?;
    write(&ctx.out.join("classification.csv"), &csv)
}

fn run_dir(out: &Path, cfg: &Config, m: &ModelSpec) -> PathBuf {
    if cfg.models.len() == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("model_{:02}", m.index))
    }
}

pub fn simulate(ctx: &Context) -> Result<()> {
    let cfg = ctx.load()?;
    let sim = cfg.sim()?;
    cfg.initial()?;
    cfg.grid()?;
    let sim_config = SimConfig {
        concentration: cfg.diagnostics.concentration,
        ..sim.config.clone()
    };
    sim_config.validate()?;
    let params: Vec<ModelParams> = cfg.models.iter().map(|m| m.params()).collect::<Result<_>>()?;
    let lib_dir = cfg.library_dir(&ctx.out);
    let lib = match cfg.initial()?.kind {
        InitialKind::GroundState { .. } => library(&lib_dir)?,
        _ => Vec::new(),
    };

    let results = pool::map(ctx.jobs, &cfg.models, |i, m| {
        simulate_one(&cfg, m, &params[i], &sim_config, &lib, &lib_dir, &run_dir(&ctx.out, &cfg, m))
    });
    let mut aborted = Vec::new();
    for (m, res) in cfg.models.iter().zip(results) {
        if res? == StopReason::MassDriftAbort {
            aborted.push(m.index);
        }
    }
    if !aborted.is_empty() {
        return Err(CliError::Integrity(format!(
            "mass drift abort in model(s) {aborted:?}; artifacts were kept"
        )));
    }
    Ok(())
}

fn simulate_one(
    cfg: &Config,
    m: &ModelSpec,
    params: &ModelParams,
    sim_config: &SimConfig,
    lib: &[GroundState],
    lib_dir: &Path,
    dir: &Path,
) -> Result<StopReason> {
    let (u0, used) = initial_data(cfg, params, lib)?;
    let weight = cfg
        .diagnostics
        .virial_radius
        .map(|r| make_weight(r, u0.grid()))
        .transpose()?;
    let traj = dynamics::run(&u0, params, sim_config, weight.as_ref())?;

    mkdir(dir)?;
    let mut manifest = Manifest::new("simulate");
    manifest.set("config_path", absolute(&cfg.source).display());
    manifest.set("model_index", m.index);
    manifest.config(&cfg.echo(m));
    manifest.set("library_dir", absolute(lib_dir).display());
    if let Some(gs) = used {
        manifest.artifact("ground_state_dir", dir, &absolute(lib_dir));
        manifest.artifact("ground_state", dir, &absolute(&lib_dir.join(format!("{}.bin", gs.file_stem()))));
    }

    let diag_path = dir.join("diagnostics.csv");
    write(&diag_path, &dynamics::diagnostics_csv(&traj.diagnostics))?;
    manifest.artifact("diagnostics_csv", dir, &diag_path);

    let snap_dir = dir.join("snapshots");
    if snap_dir.exists() {
        for e in fs::read_dir(&snap_dir).map_err(|e| CliError::io(&snap_dir, e))?.flatten() {
            if e.path().extension().is_some_and(|x| x == "bin") {
                fs::remove_file(e.path()).map_err(|err| CliError::io(e.path(), err))?;
            }
        }
    }
    mkdir(&snap_dir)?;
    manifest.artifact("snapshot_dir", dir, &snap_dir);
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let p = snap_dir.join(format!("snap_{k:05}.bin"));
        snapshot::write(&p, &snap.field, snap.time, None)?;
        manifest.artifact("snapshot", dir, &p);
    }

    let summary = dir.join("summary.txt");
    write(&summary, &run_summary(&traj))?;
    manifest.artifact("report", dir, &summary);

    if cfg.diagnostics.plots {
        let plots = dir.join("plots");
        mkdir(&plots)?;
        for (name, plot) in simulation_plots(&traj.diagnostics, cfg.diagnostics.log_hs) {
            let p = plots.join(name);
            write(&p, &plot.to_svg())?;
            manifest.artifact("plot", dir, &p);
        }
    }
    manifest.set("stop_reason", traj.stop_reason);
    manifest.set("t_stop", traj.t_stop);
    manifest.set("steps", traj.steps);
    manifest.write(&dir.join("manifest.txt"))?;

    let d0 = &traj.diagnostics[0];
    let last = traj.diagnostics.last().unwrap_or(d0);
    println!(
        "model {}: {} at t = {:.6} after {} steps ({}); hs {:.4e} -> {:.4e}; output {}",
        m.index,
        traj.stop_reason,
        traj.t_stop,
        traj.steps,
        traj.stop_detail,
        d0.hs,
        last.hs,
        dir.display()
    );
    Ok(traj.stop_reason)
}

fn run_summary(traj: &TrajectoryResult) -> String {
    let d = &traj.diagnostics;
    let d0 = &d[0];
    let mass_drift = d.iter().map(|r| ((r.mass - d0.mass) / d0.mass).abs()).fold(0.0, f64::max);
    let energy_drift = d.iter().map(|r| (r.energy - d0.energy).abs()).fold(0.0, f64::max);
    let hs_max = d.iter().map(|r| r.hs).fold(0.0, f64::max);
    let mut out = String::new();
    writeln!(out, "stop_reason={}", traj.stop_reason).unwrap();
    writeln!(out, "stop_detail={}", traj.stop_detail).unwrap();
    writeln!(out, "t_stop={:.17e}", traj.t_stop).unwrap();
    writeln!(out, "steps={}", traj.steps).unwrap();
    writeln!(out, "dt_final={:.17e}", traj.dt_final).unwrap();
    writeln!(out, "snapshots={}", traj.snapshots.len()).unwrap();
    writeln!(out, "mass0={:.17e}", d0.mass).unwrap();
    writeln!(out, "energy0={:.17e}", d0.energy).unwrap();
    writeln!(out, "hs0={:.17e}", d0.hs).unwrap();
    writeln!(out, "max_rel_mass_drift={mass_drift:.6e}").unwrap();
    writeln!(out, "max_abs_energy_drift={energy_drift:.6e}").unwrap();
    writeln!(out, "hs_growth={:.6e}", hs_max / d0.hs).unwrap();
    out
}

fn simulation_plots(d: &[DiagnosticsRecord], log_hs: bool) -> Vec<(&'static str, Plot)> {
    let e0 = d.first().map_or(0.0, |r| r.energy);
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let mut out = vec![
        (
            "hs.svg",
            Plot::new("Hs seminorm", "t", "hs")
                .log_y(log_hs)
                .series("hs", d.iter().map(|r| (r.t, r.hs)).collect()),
        ),
        (
            "energy_drift.svg",
            Plot::new("Relative energy drift", "t", "|E(t) - E(0)| / |E(0)|")
                .log_y(true)
                .series("energy", d.iter().map(|r| (r.t, (r.energy - e0).abs() / scale)).collect()),
        ),
    ];
    let virial: Vec<(f64, f64)> = d.iter().filter_map(|r| r.virial.map(|v| (r.t, v))).collect();
    if !virial.is_empty() {
        out.push(("virial.svg", Plot::new("Localized virial", "t", "M(t)").series("virial", virial)));
    }
    out
}

fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin"))
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("no snapshots in {}", dir.display())));
    }
    Ok(paths)
}

pub fn analyze(ctx: &Context, manifest_path: Option<&Path>) -> Result<()> {
    let path = manifest_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.out.join("manifest.txt"));
    let m = Manifest::read(&path)?;
    let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let s = m.f64("config.model.s")?;
    let dim = m.f64("config.model.dim")? as usize;
    let delta = m.f64("config.diagnostics.concentration_delta").unwrap_or(0.5 / s);
    let window = m.f64("config.diagnostics.rate_window").unwrap_or(0.5);
    let plots_on = m.get("config.diagnostics.plots") != Some("false");

    let snaps: Vec<Snapshot> = list_snapshots(&m.resolve(&path, "snapshot_dir")?)?
        .iter()
        .map(|p| snapshot::read(p))
        .collect::<std::result::Result<_, _>>()?;
    let conc = blowup::concentration_series_of(&snaps, s, delta)?;
    write(&root.join("concentration.csv"), &blowup::concentration_csv(&conc, dim))?;
    let resolved: Vec<Snapshot> = blowup::resolved_snapshots(&snaps).into_iter().cloned().collect();

    let pc = 2.0 * s / dim as f64;
    let critical = m
        .f64("config.model.p2")
        .is_ok_and(|p2| (p2 - pc).abs() <= 1e-12 * pc);
    let mut report = String::new();
    writeln!(report, "snapshots={}", snaps.len()).unwrap();
    writeln!(report, "resolved_snapshots={}", resolved.len()).unwrap();
    writeln!(report, "delta={delta:.17e}").unwrap();
    if let Some(c) = conc.last() {
        writeln!(report, "last_window_mass={:.17e}", c.window_mass).unwrap();
    }
    let last_resolved = resolved.last().map(|snap| {
        conc.iter()
            .find(|c| c.t == snap.time)
            .map_or(f64::NAN, |c| c.window_mass)
    });
    if let Some(w) = last_resolved {
        writeln!(report, "last_resolved_window_mass={w:.17e}").unwrap();
    }

    let mut profile: Option<Vec<ProfileDistance>> = None;
    let mut q_mass = None;
    if critical {
        let lib_dir = m
            .get("library_dir")
            .map(PathBuf::from)
            .unwrap_or_else(|| ctx.out.join("ground_states"));
        let lib = library(&lib_dir)?;
        let gs = ground_state::find(&lib, s, dim, pc)?;
        q_mass = Some(gs.mass_sq);
        writeln!(report, "ground_state_mass={:.17e}", gs.mass_sq).unwrap();
        let rows = blowup::profile_series(&resolved, gs, s)?;
        write(&root.join("profile.csv"), &blowup::profile_csv(&rows))?;
        writeln!(report, "profile=profile.csv").unwrap();
        profile = Some(rows);
    } else {
        writeln!(report, "profile=skipped (p2 is not the mass-critical power)").unwrap();
    }

    let diag_path = m.resolve(&path, "diagnostics_csv")?;
    let text = fs::read_to_string(&diag_path).map_err(|e| CliError::io(&diag_path, e))?;
    let rows = dynamics::parse_diagnostics_csv(&text)?;
    let (t, hs): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.t, r.hs)).unzip();
    let fit = match blowup::fit_rate(&t, &hs, window) {
        Ok(f) => f.summary(),
        Err(e) => format!("status=error\nerror={e}\n"),
    };
    write(&root.join("rate_fit.txt"), &fit)?;
    write(&root.join("analysis.txt"), &report)?;

    if plots_on {
        let plots = root.join("plots");
        mkdir(&plots)?;
        let mut cplot = Plot::new("Windowed mass", "t", "mass in window")
            .series("window mass", conc.iter().map(|c| (c.t, c.window_mass)).collect());
        if let (Some(qm), Some(first), Some(last)) = (q_mass, conc.first(), conc.last()) {
            cplot = cplot.series("ground state mass", vec![(first.t, qm), (last.t, qm)]);
        }
        write(&plots.join("concentration.svg"), &cplot.to_svg())?;
        if let Some(rows) = &profile {
            let pplot = Plot::new("Distance to the ground state", "t", "distance")
                .log_y(true)
                .series("hs", rows.iter().map(|r| (r.t, r.hs_dist)).collect())
                .series("L2", rows.iter().map(|r| (r.t, r.l2_dist)).collect());
            write(&plots.join("profile.svg"), &pplot.to_svg())?;
        }
    }
    print!("{report}");
    print!("{fit}");
    Ok(())
}
