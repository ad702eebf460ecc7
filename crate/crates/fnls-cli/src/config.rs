//! Flat `key = value` run configuration with dotted sections.
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `experiment` | thresholds, constants, fiber, extremals, solve, sweep or verify |
//! | `output_dir` | run directory |
//! | `params.N`, `params.s`, `params.q`, `params.mu`, `params.a` | problem parameters |
//! | `grid.M`, `grid.L` | points per axis and box half length (default per N) |
//! | `solver.*` | every `SolverConfig` field |
//! | `constants.c_gns`, `constants.s_sob` | skip estimation and use these |
//! | `fiber.A`, `fiber.B`, `fiber.C`, `fiber.t_lo`, `fiber.t_hi`, `fiber.points` | fiber experiment |
//! | `extremals.delta` | cutoff radius (default L/4) |
//! | `sweep.mode` | `continuation` (warm starts, default) or `independent` |
//! | `sweep.restarts` | seeds per μ in independent mode |
//! | `schedule` | comma-separated μ list (sweep) or ε list (extremals) |

use fnls::solvers::SolverConfig;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0}")]
    UnknownKey(String),
    #[error("duplicate config key {0}")]
    Duplicate(String),
    #[error("config key {key}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("missing config key {0}")]
    Missing(&'static str),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("experiment {flag} requested but config names {config}")]
    ExperimentMismatch { flag: String, config: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Thresholds,
    Constants,
    Fiber,
    Extremals,
    Solve,
    Sweep,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Thresholds,
        Experiment::Constants,
        Experiment::Fiber,
        Experiment::Extremals,
        Experiment::Solve,
        Experiment::Sweep,
        Experiment::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Thresholds => "thresholds",
            Experiment::Constants => "constants",
            Experiment::Fiber => "fiber",
            Experiment::Extremals => "extremals",
            Experiment::Solve => "solve",
            Experiment::Sweep => "sweep",
            Experiment::Verify => "verify",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| ConfigError::UnknownExperiment(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Continuation,
    Independent,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamsSpec {
    pub n: Option<usize>,
    pub s: Option<f64>,
    pub q: Option<f64>,
    pub mu: Option<f64>,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSpec {
    pub m: Option<usize>,
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiberSpec {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub t_lo: Option<f64>,
    pub t_hi: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub output_dir: Option<PathBuf>,
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub c_gns: Option<f64>,
    pub s_sob: Option<f64>,
    pub fiber: FiberSpec,
    pub delta: Option<f64>,
    pub sweep_mode: SweepMode,
    pub sweep_restarts: usize,
    pub schedule: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            output_dir: None,
            params: ParamsSpec::default(),
            grid: GridSpec::default(),
            solver: SolverConfig::default(),
            c_gns: None,
            s_sob: None,
            fiber: FiberSpec::default(),
            delta: None,
            sweep_mode: SweepMode::Continuation,
            sweep_restarts: 1,
            schedule: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value { key: key.to_string(), value: value.to_string() })
}

fn float(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = num(key, value)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::Value { key: key.to_string(), value: value.to_string() })
    }
}

/// Shortest representation that parses back to the same f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
            }
            if seen.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate(k.to_string()));
            }
        }
        let mut cfg = RunConfig::default();
        for (k, v) in &seen {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key;
        match k {
            "experiment" => self.experiment = Some(Experiment::parse(value)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "params.N" => self.params.n = Some(num(k, value)?),
            "params.s" => self.params.s = Some(float(k, value)?),
            "params.q" => self.params.q = Some(float(k, value)?),
            "params.mu" => self.params.mu = Some(float(k, value)?),
            "params.a" => self.params.a = Some(float(k, value)?),
            "grid.M" => self.grid.m = Some(num(k, value)?),
            "grid.L" => self.grid.l = Some(float(k, value)?),
            "solver.step" => self.solver.step = float(k, value)?,
            "solver.armijo_shrink" => self.solver.armijo_shrink = float(k, value)?,
            "solver.armijo_slope" => self.solver.armijo_slope = float(k, value)?,
            "solver.grad_tol" => self.solver.grad_tol = float(k, value)?,
            "solver.pohozaev_tol" => self.solver.pohozaev_tol = float(k, value)?,
            "solver.max_iters" => self.solver.max_iters = num(k, value)?,
            "solver.seed" => self.solver.seed = num(k, value)?,
            "solver.init_perturbation" => self.solver.init_perturbation = float(k, value)?,
            "solver.support_frac" => self.solver.support_frac = float(k, value)?,
            "constants.c_gns" => self.c_gns = Some(float(k, value)?),
            "constants.s_sob" => self.s_sob = Some(float(k, value)?),
            "fiber.A" => self.fiber.a = Some(float(k, value)?),
            "fiber.B" => self.fiber.b = Some(float(k, value)?),
            "fiber.C" => self.fiber.c = Some(float(k, value)?),
            "fiber.t_lo" => self.fiber.t_lo = Some(float(k, value)?),
            "fiber.t_hi" => self.fiber.t_hi = Some(float(k, value)?),
            "fiber.points" => self.fiber.points = Some(num(k, value)?),
            "extremals.delta" => self.delta = Some(float(k, value)?),
            "sweep.mode" => {
                self.sweep_mode = match value {
                    "continuation" => SweepMode::Continuation,
                    "independent" => SweepMode::Independent,
                    _ => return Err(ConfigError::Value { key: k.to_string(), value: value.to_string() }),
                }
            }
            "sweep.restarts" => self.sweep_restarts = num(k, value)?,
            "schedule" => {
                let list: Result<Vec<f64>, _> =
                    value.split(',').map(str::trim).filter(|t| !t.is_empty()).map(|t| float(k, t)).collect();
                self.schedule = Some(list?);
            }
            _ => return Err(ConfigError::UnknownKey(k.to_string())),
        }
        Ok(())
    }

    /// Canonical text form: every set key, sorted, one per line.
    pub fn to_text(&self) -> String {
        let mut kv: Vec<(&str, String)> = Vec::new();
        if let Some(e) = self.experiment {
            kv.push(("experiment", e.name().to_string()));
        }
        if let Some(d) = &self.output_dir {
            kv.push(("output_dir", d.display().to_string()));
        }
        let p = &self.params;
        if let Some(n) = p.n {
            kv.push(("params.N", n.to_string()));
        }
        for (k, v) in [("params.s", p.s), ("params.q", p.q), ("params.mu", p.mu), ("params.a", p.a)] {
            if let Some(v) = v {
                kv.push((k, fmt_f64(v)));
            }
        }
        if let Some(m) = self.grid.m {
            kv.push(("grid.M", m.to_string()));
        }
        if let Some(l) = self.grid.l {
            kv.push(("grid.L", fmt_f64(l)));
        }
        let s = &self.solver;
        kv.push(("solver.step", fmt_f64(s.step)));
        kv.push(("solver.armijo_shrink", fmt_f64(s.armijo_shrink)));
        kv.push(("solver.armijo_slope", fmt_f64(s.armijo_slope)));
        kv.push(("solver.grad_tol", fmt_f64(s.grad_tol)));
        kv.push(("solver.pohozaev_tol", fmt_f64(s.pohozaev_tol)));
        kv.push(("solver.max_iters", s.max_iters.to_string()));
        kv.push(("solver.seed", s.seed.to_string()));
        kv.push(("solver.init_perturbation", fmt_f64(s.init_perturbation)));
        kv.push(("solver.support_frac", fmt_f64(s.support_frac)));
        for (k, v) in [("constants.c_gns", self.c_gns), ("constants.s_sob", self.s_sob)] {
            if let Some(v) = v {
                kv.push((k, fmt_f64(v)));
            }
        }
        let f = &self.fiber;
        for (k, v) in [("fiber.A", f.a), ("fiber.B", f.b), ("fiber.C", f.c), ("fiber.t_lo", f.t_lo), ("fiber.t_hi", f.t_hi)] {
            if let Some(v) = v {
                kv.push((k, fmt_f64(v)));
            }
        }
        if let Some(n) = f.points {
            kv.push(("fiber.points", n.to_string()));
        }
        if let Some(d) = self.delta {
            kv.push(("extremals.delta", fmt_f64(d)));
        }
        kv.push((
            "sweep.mode",
            match self.sweep_mode {
                SweepMode::Continuation => "continuation".into(),
                SweepMode::Independent => "independent".into(),
            },
        ));
        kv.push(("sweep.restarts", self.sweep_restarts.to_string()));
        if let Some(list) = &self.schedule {
            kv.push(("schedule", list.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")));
        }
        kv.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Resolves the experiment from a subcommand and/or the `experiment` key.
    pub fn resolve_experiment(&mut self, flag: Option<Experiment>) -> Result<Experiment, ConfigError> {
        match (flag, self.experiment) {
            (Some(f), Some(c)) if f != c => {
                Err(ConfigError::ExperimentMismatch { flag: f.name().into(), config: c.name().into() })
            }
            (Some(f), _) | (None, Some(f)) => {
                self.experiment = Some(f);
                Ok(f)
            }
            (None, None) => Err(ConfigError::Missing("experiment")),
        }
    }

    pub fn require_n(&self) -> Result<usize, ConfigError> {
        self.params.n.ok_or(ConfigError::Missing("params.N"))
    }

    pub fn require_s(&self) -> Result<f64, ConfigError> {
        self.params.s.ok_or(ConfigError::Missing("params.s"))
    }

    pub fn require_q(&self) -> Result<f64, ConfigError> {
        self.params.q.ok_or(ConfigError::Missing("params.q"))
    }

    pub fn require_mu(&self) -> Result<f64, ConfigError> {
        self.params.mu.ok_or(ConfigError::Missing("params.mu"))
    }

    pub fn require_a(&self) -> Result<f64, ConfigError> {
        self.params.a.ok_or(ConfigError::Missing("params.a"))
    }

    pub fn require_output_dir(&self) -> Result<PathBuf, ConfigError> {
        self.output_dir.clone().ok_or(ConfigError::Missing("output_dir"))
    }

    pub fn require_schedule(&self) -> Result<&[f64], ConfigError> {
        self.schedule.as_deref().ok_or(ConfigError::Missing("schedule"))
    }
}
