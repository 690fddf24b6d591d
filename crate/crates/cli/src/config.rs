//! INI-style run configuration: `[section]` headers and `key = value` lines.

use std::path::{Path, PathBuf};

use fracollapse::dynamics::{ConcentrationWindow, SimConfig};
use fracollapse::ground_state::SolverOptions;
use fracollapse::thresholds::ClassifyOptions;
use fracollapse::ModelParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

const SECTIONS: &[&str] = &["model", "grid", "ground_state", "sim", "diagnostics", "initial", "classify"];

pub fn parse_ini(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| cfg(format!("line {line_no}: unterminated section header")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(cfg(format!("line {line_no}: unknown section [{name}]")));
            }
            if name != "model" && out.iter().any(|s| s.name == name) {
                return Err(cfg(format!("line {line_no}: section [{name}] appears twice")));
            }
            out.push(Section {
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cfg(format!("line {line_no}: expected key = value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(cfg(format!("line {line_no}: empty key")));
        }
        let sec = out
            .last_mut()
            .ok_or_else(|| cfg(format!("line {line_no}: '{key}' appears before any section")))?;
        if sec.entries.iter().any(|e| e.key == key) {
            return Err(cfg(format!("line {line_no}: [{}] {key} given twice", sec.name)));
        }
        sec.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line: line_no,
        });
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let t = line.trim_start();
    if t.starts_with('#') || t.starts_with(';') {
        return "";
    }
    match line.find(" #") {
        Some(i) => &line[..i],
        None => line,
    }
}

fn cfg(msg: String) -> CliError {
    CliError::Config(msg)
}

/// Typed accessors over one section; rejects keys outside `allowed`.
struct Reader<'a> {
    sec: &'a Section,
}

impl<'a> Reader<'a> {
    fn new(sec: &'a Section, allowed: &[&str]) -> Result<Self> {
        for e in &sec.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(cfg(format!(
                    "line {}: unknown key '{}' in [{}]",
                    e.line, e.key, sec.name
                )));
            }
        }
        Ok(Reader { sec })
    }

    fn raw(&self, key: &str) -> Option<&'a Entry> {
        self.sec.entries.iter().find(|e| e.key == key)
    }

    fn bad(&self, e: &Entry, what: &str) -> CliError {
        cfg(format!(
            "line {}: [{}] {}: expected {what}, got '{}'",
            e.line, self.sec.name, e.key, e.value
        ))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|e| e.value.parse::<f64>().map_err(|_| self.bad(e, "a number")))
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.raw(key)
            .map(|e| e.value.parse::<usize>().map_err(|_| self.bad(e, "a non-negative integer")))
            .transpose()
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.raw(key)
            .map(|e| e.value.parse::<u64>().map_err(|_| self.bad(e, "a non-negative integer")))
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.raw(key)
            .map(|e| match e.value.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(self.bad(e, "true or false")),
            })
            .transpose()
    }

    fn str(&self, key: &str) -> Option<&'a str> {
        self.raw(key).map(|e| e.value.as_str())
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| cfg(format!("[{}] at line {} needs '{key}'", self.sec.name, self.sec.line)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct RawModel {
    s: Option<f64>,
    dim: Option<usize>,
    p: Option<f64>,
    p1: Option<f64>,
    p2: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
}

impl RawModel {
    fn read(sec: &Section) -> Result<Self> {
        let r = Reader::new(sec, &["s", "dim", "p", "p1", "p2", "lambda1", "lambda2"])?;
        Ok(RawModel {
            s: r.f64("s")?,
            dim: r.usize("dim")?,
            p: r.f64("p")?,
            p1: r.f64("p1")?,
            p2: r.f64("p2")?,
            lambda1: r.f64("lambda1")?,
            lambda2: r.f64("lambda2")?,
        })
    }

    fn over(&self, base: &RawModel) -> RawModel {
        RawModel {
            s: self.s.or(base.s),
            dim: self.dim.or(base.dim),
            p: self.p.or(base.p),
            p1: self.p1.or(base.p1),
            p2: self.p2.or(base.p2),
            lambda1: self.lambda1.or(base.lambda1),
            lambda2: self.lambda2.or(base.lambda2),
        }
    }
}

/// One resolved `[model]`; later `[model]` sections override the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub index: usize,
    pub s: f64,
    pub dim: usize,
    pub p: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
}

impl ModelSpec {
    fn need(&self, key: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| cfg(format!("[model] #{} needs '{key}' for this command", self.index)))
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.s,
            self.dim,
            self.need("p1", self.p1)?,
            self.need("p2", self.p2)?,
            self.need("lambda1", self.lambda1)?,
            self.need("lambda2", self.lambda2)?,
        )?)
    }

    /// Powers whose ground states the model needs: `p` if given, else `p1` and `p2`.
    pub fn ground_state_powers(&self) -> Result<Vec<f64>> {
        if let Some(p) = self.p {
            return Ok(vec![p]);
        }
        let mut out: Vec<f64> = [self.p1, self.p2].into_iter().flatten().collect();
        out.dedup();
        if out.is_empty() {
            return Err(cfg(format!("[model] #{} needs 'p' (or p1/p2)", self.index)));
        }
        Ok(out)
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        push(out, "model.s", self.s);
        push(out, "model.dim", self.dim);
        for (k, v) in [
            ("p", self.p),
            ("p1", self.p1),
            ("p2", self.p2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            if let Some(v) = v {
                push(out, &format!("model.{k}"), v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfLength {
    Fixed(f64),
    /// Ground-state box divided by the data's `rho`.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub half_length: HalfLength,
}

impl GridSpec {
    fn read(sec: &Section) -> Result<Self> {
        let r = Reader::new(sec, &["n", "half_length"])?;
        let n = r.usize("n")?;
        let n = r.require("n", n)?;
        let e = r.raw("half_length");
        let e = r.require("half_length", e)?;
        let half_length = if e.value == "auto" {
            HalfLength::Auto
        } else {
            HalfLength::Fixed(e.value.parse().map_err(|_| r.bad(e, "a number or 'auto'"))?)
        };
        Ok(GridSpec { n, half_length })
    }

    pub fn fixed(&self) -> Result<f64> {
        match self.half_length {
            HalfLength::Fixed(l) => Ok(l),
            HalfLength::Auto => Err(cfg(
                "[grid] half_length = auto only applies to ground-state initial data".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rho {
    Value(f64),
    /// Multiple of the `rho` above which the data have negative energy.
    NegativeEnergy(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    Ring {
        amplitude: f64,
        radius: f64,
        width: f64,
        eps: f64,
        mode: u32,
    },
    GroundState {
        p: Option<f64>,
        c: f64,
        phase: f64,
        rho: Rho,
    },
    Snapshot {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub noise: f64,
}

impl InitialSpec {
    fn read(sec: &Section, base: &Path) -> Result<Self> {
        let r = Reader::new(
            sec,
            &[
                "kind", "amplitude", "width", "radius", "eps", "mode", "p", "c", "phase", "rho",
                "rho_factor", "path", "noise",
            ],
        )?;
        let kind = r.require("kind", r.str("kind"))?;
        let own: &[&str] = match kind {
            "gaussian" => &["amplitude", "width"],
            "ring" => &["amplitude", "radius", "width", "eps", "mode"],
            "ground_state" => &["p", "c", "phase", "rho", "rho_factor"],
            "snapshot" => &["path"],
            other => {
                return Err(cfg(format!(
                    "[initial] kind '{other}' is not one of gaussian, ring, ground_state, snapshot"
                )))
            }
        };
        for e in &sec.entries {
            if !matches!(e.key.as_str(), "kind" | "noise") && !own.contains(&e.key.as_str()) {
                return Err(cfg(format!(
                    "line {}: [initial] {} does not apply to kind = {kind}",
                    e.line, e.key
                )));
            }
        }
        let kind = match kind {
            "gaussian" => InitialKind::Gaussian {
                amplitude: r.f64("amplitude")?.unwrap_or(1.0),
                width: r.f64("width")?.unwrap_or(1.0),
            },
            "ring" => InitialKind::Ring {
                amplitude: r.f64("amplitude")?.unwrap_or(1.0),
                radius: r.f64("radius")?.unwrap_or(2.0),
                width: r.f64("width")?.unwrap_or(0.5),
                eps: r.f64("eps")?.unwrap_or(0.0),
                mode: r.usize("mode")?.unwrap_or(0) as u32,
            },
            "ground_state" => InitialKind::GroundState {
                p: r.f64("p")?,
                c: r.f64("c")?.unwrap_or(1.0),
                phase: r.f64("phase")?.unwrap_or(0.0),
                rho: match (r.f64("rho")?, r.f64("rho_factor")?) {
                    (Some(_), Some(_)) => {
                        return Err(cfg("[initial] give rho or rho_factor, not both".into()))
                    }
                    (_, Some(f)) => Rho::NegativeEnergy(f),
                    (v, None) => Rho::Value(v.unwrap_or(1.0)),
                },
            },
            _ => InitialKind::Snapshot {
                path: base.join(r.require("path", r.str("path"))?),
            },
        };
        Ok(InitialSpec {
            kind,
            noise: r.f64("noise")?.unwrap_or(0.0),
        })
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        match &self.kind {
            InitialKind::Gaussian { amplitude, width } => {
                push(out, "initial.kind", "gaussian");
                push(out, "initial.amplitude", amplitude);
                push(out, "initial.width", width);
            }
            InitialKind::Ring {
                amplitude,
                radius,
                width,
                eps,
                mode,
            } => {
                push(out, "initial.kind", "ring");
                push(out, "initial.amplitude", amplitude);
                push(out, "initial.radius", radius);
                push(out, "initial.width", width);
                push(out, "initial.eps", eps);
                push(out, "initial.mode", mode);
            }
            InitialKind::GroundState { p, c, phase, rho } => {
                push(out, "initial.kind", "ground_state");
                if let Some(p) = p {
                    push(out, "initial.p", p);
                }
                push(out, "initial.c", c);
                push(out, "initial.phase", phase);
                match rho {
                    Rho::Value(v) => push(out, "initial.rho", v),
                    Rho::NegativeEnergy(f) => push(out, "initial.rho_factor", f),
                }
            }
            InitialKind::Snapshot { path } => {
                push(out, "initial.kind", "snapshot");
                push(out, "initial.path", path.display());
            }
        }
        push(out, "initial.noise", self.noise);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub config: SimConfig,
    pub seed: u64,
}

impl SimSpec {
    fn read(sec: &Section) -> Result<Self> {
        let r = Reader::new(
            sec,
            &[
                "dt", "t_end", "snapshot_every", "diag_every", "stop_gradient_factor",
                "stop_mass_drift", "adapt", "adapt_factor", "dt_min", "seed",
            ],
        )?;
        let d = SimConfig::default();
        let config = SimConfig {
            dt: r.require("dt", r.f64("dt")?)?,
            t_end: r.require("t_end", r.f64("t_end")?)?,
            snapshot_every: r.usize("snapshot_every")?.unwrap_or(d.snapshot_every),
            diag_every: r.usize("diag_every")?.unwrap_or(d.diag_every),
            stop_gradient_factor: r.f64("stop_gradient_factor")?.unwrap_or(d.stop_gradient_factor),
            stop_mass_drift: r.f64("stop_mass_drift")?.unwrap_or(d.stop_mass_drift),
            adapt: r.bool("adapt")?.unwrap_or(d.adapt),
            adapt_factor: r.f64("adapt_factor")?.unwrap_or(d.adapt_factor),
            dt_min: r.f64("dt_min")?.unwrap_or(d.dt_min),
            concentration: None,
        };
        Ok(SimSpec {
            config,
            seed: r.u64("seed")?.unwrap_or(0),
        })
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        let c = &self.config;
        push(out, "sim.dt", c.dt);
        push(out, "sim.t_end", c.t_end);
        push(out, "sim.snapshot_every", c.snapshot_every);
        push(out, "sim.diag_every", c.diag_every);
        push(out, "sim.stop_gradient_factor", c.stop_gradient_factor);
        push(out, "sim.stop_mass_drift", c.stop_mass_drift);
        push(out, "sim.adapt", c.adapt);
        push(out, "sim.adapt_factor", c.adapt_factor);
        push(out, "sim.dt_min", c.dt_min);
        push(out, "sim.seed", self.seed);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagSpec {
    pub virial_radius: Option<f64>,
    pub concentration: Option<ConcentrationWindow>,
    pub plots: bool,
    pub log_hs: bool,
    pub rate_window: f64,
    /// `delta` for the analyze step; defaults to `0.5 / s`.
    pub analyze_delta: Option<f64>,
}

impl Default for DiagSpec {
    fn default() -> Self {
        DiagSpec {
            virial_radius: None,
            concentration: None,
            plots: true,
            log_hs: true,
            rate_window: 0.5,
            analyze_delta: None,
        }
    }
}

impl DiagSpec {
    fn read(sec: &Section) -> Result<Self> {
        let r = Reader::new(
            sec,
            &[
                "virial_radius", "concentration_delta", "concentration_radius", "plots", "log_hs",
                "rate_window",
            ],
        )?;
        let delta = r.f64("concentration_delta")?;
        let concentration = match (delta, r.f64("concentration_radius")?) {
            (Some(_), Some(_)) => {
                return Err(cfg(
                    "[diagnostics] give concentration_delta or concentration_radius, not both".into(),
                ))
            }
            (Some(d), None) => Some(ConcentrationWindow::Rate(d)),
            (None, Some(a)) => Some(ConcentrationWindow::Fixed(a)),
            (None, None) => None,
        };
        let d = DiagSpec::default();
        Ok(DiagSpec {
            virial_radius: r.f64("virial_radius")?,
            concentration,
            plots: r.bool("plots")?.unwrap_or(d.plots),
            log_hs: r.bool("log_hs")?.unwrap_or(d.log_hs),
            rate_window: r.f64("rate_window")?.unwrap_or(d.rate_window),
            analyze_delta: delta,
        })
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        if let Some(r) = self.virial_radius {
            push(out, "diagnostics.virial_radius", r);
        }
        match self.concentration {
            Some(ConcentrationWindow::Rate(d)) => push(out, "diagnostics.concentration_delta", d),
            Some(ConcentrationWindow::Fixed(a)) => push(out, "diagnostics.concentration_radius", a),
            None => {}
        }
        push(out, "diagnostics.plots", self.plots);
        push(out, "diagnostics.log_hs", self.log_hs);
        push(out, "diagnostics.rate_window", self.rate_window);
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroundStateSpec {
    pub options: SolverOptions,
    pub library: Option<PathBuf>,
}

impl GroundStateSpec {
    fn read(sec: &Section, base: &Path) -> Result<Self> {
        let r = Reader::new(
            sec,
            &[
                "tol", "max_iter", "width", "amplitude", "symmetrize", "symmetrize_every",
                "max_retries", "library",
            ],
        )?;
        let d = SolverOptions::default();
        Ok(GroundStateSpec {
            options: SolverOptions {
                tol: r.f64("tol")?.unwrap_or(d.tol),
                max_iter: r.usize("max_iter")?.unwrap_or(d.max_iter),
                width: r.f64("width")?.unwrap_or(d.width),
                amplitude: r.f64("amplitude")?.unwrap_or(d.amplitude),
                symmetrize: r.bool("symmetrize")?.unwrap_or(d.symmetrize),
                symmetrize_every: r.usize("symmetrize_every")?.unwrap_or(d.symmetrize_every),
                max_retries: r.usize("max_retries")?.unwrap_or(d.max_retries),
            },
            library: r.str("library").map(|p| base.join(p)),
        })
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        let o = &self.options;
        push(out, "ground_state.tol", o.tol);
        push(out, "ground_state.max_iter", o.max_iter);
        push(out, "ground_state.width", o.width);
        push(out, "ground_state.amplitude", o.amplitude);
        push(out, "ground_state.symmetrize", o.symmetrize);
        push(out, "ground_state.symmetrize_every", o.symmetrize_every);
        push(out, "ground_state.max_retries", o.max_retries);
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub source: PathBuf,
    pub models: Vec<ModelSpec>,
    pub grid: Option<GridSpec>,
    pub ground_state: GroundStateSpec,
    pub sim: Option<SimSpec>,
    pub diagnostics: DiagSpec,
    pub initial: Option<InitialSpec>,
    pub classify: ClassifyOptions,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            cfg(format!("cannot read config {}: {e}", path.display()))
        })?;
        Config::parse(&text, path)
    }

    /// Relative paths inside the file resolve against the file's directory.
    pub fn parse(text: &str, source: &Path) -> Result<Config> {
        let base = source.parent().unwrap_or(Path::new("."));
        let sections = parse_ini(text)?;
        let one = |name: &str| sections.iter().find(|s| s.name == name);

        let raws: Vec<RawModel> = sections
            .iter()
            .filter(|s| s.name == "model")
            .map(RawModel::read)
            .collect::<Result<_>>()?;
        if raws.is_empty() {
            return Err(cfg("missing [model] section".into()));
        }
        let models = raws
            .iter()
            .enumerate()
            .map(|(i, raw)| {
                let m = raw.over(&raws[0]);
                let need = |k: &str| cfg(format!("[model] #{i} needs '{k}'"));
                Ok(ModelSpec {
                    index: i,
                    s: m.s.ok_or_else(|| need("s"))?,
                    dim: m.dim.ok_or_else(|| need("dim"))?,
                    p: m.p,
                    p1: m.p1,
                    p2: m.p2,
                    lambda1: m.lambda1,
                    lambda2: m.lambda2,
                })
            })
            .collect::<Result<_>>()?;

        let classify = match one("classify") {
            None => ClassifyOptions::default(),
            Some(sec) => {
                let r = Reader::new(sec, &["case3_constant", "orbit_tol"])?;
                let d = ClassifyOptions::default();
                ClassifyOptions {
                    case3_constant: r.f64("case3_constant")?,
                    orbit_tol: r.f64("orbit_tol")?.unwrap_or(d.orbit_tol),
                }
            }
        };

        Ok(Config {
            source: source.to_path_buf(),
            models,
            grid: one("grid").map(GridSpec::read).transpose()?,
            ground_state: one("ground_state")
                .map(|s| GroundStateSpec::read(s, base))
                .transpose()?
                .unwrap_or_default(),
            sim: one("sim").map(SimSpec::read).transpose()?,
            diagnostics: one("diagnostics").map(DiagSpec::read).transpose()?.unwrap_or_default(),
            initial: one("initial").map(|s| InitialSpec::read(s, base)).transpose()?,
            classify,
        })
    }

    pub fn grid(&self) -> Result<&GridSpec> {
        self.grid.as_ref().ok_or_else(|| cfg("missing [grid] section".into()))
    }

    pub fn sim(&self) -> Result<&SimSpec> {
        self.sim.as_ref().ok_or_else(|| cfg("missing [sim] section".into()))
    }

    pub fn initial(&self) -> Result<&InitialSpec> {
        self.initial.as_ref().ok_or_else(|| cfg("missing [initial] section".into()))
    }

    pub fn library_dir(&self, out: &Path) -> PathBuf {
        self.ground_state
            .library
            .clone()
            .unwrap_or_else(|| out.join("ground_states"))
    }

    /// Fully resolved settings for one model, as `section.key` pairs.
    pub fn echo(&self, model: &ModelSpec) -> Vec<(String, String)> {
        let mut out = Vec::new();
        model.echo(&mut out);
        if let Some(g) = &self.grid {
            push(&mut out, "grid.n", g.n);
            match g.half_length {
                HalfLength::Fixed(l) => push(&mut out, "grid.half_length", l),
                HalfLength::Auto => push(&mut out, "grid.half_length", "auto"),
            }
        }
        self.ground_state.echo(&mut out);
        if let Some(s) = &self.sim {
            s.echo(&mut out);
        }
        self.diagnostics.echo(&mut out);
        if let Some(i) = &self.initial {
            i.echo(&mut out);
        }
        if let Some(c) = self.classify.case3_constant {
            push(&mut out, "classify.case3_constant", c);
        }
        push(&mut out, "classify.orbit_tol", self.classify.orbit_tol);
        out
    }
}

fn push(out: &mut Vec<(String, String)>, key: &str, v: impl std::fmt::Display) {
    out.push((key.to_string(), v.to_string()));
}
