//! Flat `key = value` experiment configuration with built-in presets.
//!
//! ```text
//! # comment
//! potential = t-500x^2
//! initial   = gaussian:0.4:50
//! grid      = 201
//! taus      = 2e-3, 1e-3, 5e-4, 2.5e-4, 1.25e-4
//! ```

use std::fmt;
use std::path::PathBuf;

use crate::analysis::{NormKind, PdeProblem, ReferenceGrid};
use crate::grid::{Grid1D, InitialCondition, Potential};
use crate::splitting::{DiffusionSubstep, SplitScheme};

/// A configuration problem, naming the offending field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Paper83,
    PaperFig1,
    ManufacturedQuadratic,
    Commuting,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Paper83,
        Preset::PaperFig1,
        Preset::ManufacturedQuadratic,
        Preset::Commuting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper83 => "paper-8.3",
            Preset::PaperFig1 => "paper-fig1",
            Preset::ManufacturedQuadratic => "manufactured-quadratic",
            Preset::Commuting => "commuting",
        }
    }

    pub fn from_name(name: &str) -> Parsed<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
                ConfigError::new("preset", format!("unknown preset `{name}` (known: {})", known.join(", ")))
            })
    }
}

/// Step sizes of a run, given either as step counts or as step lengths.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeSteps {
    Counts(Vec<usize>),
    Taus(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Reference,
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    Random,
    Commuting,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub potential: String,
    pub initial: String,
    pub x_min: f64,
    pub x_max: f64,
    pub grid: usize,
    pub scheme: SplitScheme,
    pub diffusion: DiffusionSubstep,
    pub solver: Solver,
    pub t0: f64,
    pub t_end: f64,
    /// At most one of step counts or step lengths; commands supply their
    /// own defaults when unset.
    pub time: Option<TimeSteps>,
    /// Snapshot times for `solve`.
    pub times: Vec<f64>,
    /// Coarse grid sizes for `sweep`.
    pub ms: Vec<usize>,
    pub ref_factor: usize,
    pub norm: NormKind,
    pub reference: ReferenceGrid,
    pub seed: u64,
    pub dim: usize,
    pub instances: usize,
    pub alpha: f64,
    /// Final time of the matrix rate check.
    pub matrix_t: f64,
    pub instance_kind: InstanceKind,
    /// Synthetic error series `tau^p` for `order`, bypassing the solver.
    pub manufactured: Option<f64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            potential: "t-500x^2".into(),
            initial: "gaussian:0.4:50".into(),
            x_min: 0.0,
            x_max: 1.0,
            grid: 201,
            scheme: SplitScheme::sequential(),
            diffusion: DiffusionSubstep::CrankNicolson,
            solver: Solver::Split,
            t0: 0.0,
            t_end: 1e-2,
            time: None,
            times: vec![0.0, 1e-3, 5e-3, 1e-2],
            ms: vec![26, 51, 101, 201],
            ref_factor: 4,
            norm: NormKind::DiscreteL2,
            reference: ReferenceGrid::SameGrid,
            seed: 42,
            dim: 8,
            instances: 20,
            alpha: 0.5,
            matrix_t: 1.0,
            instance_kind: InstanceKind::Random,
            manufactured: None,
            out: PathBuf::from("out"),
        }
    }
}

pub const DEFAULT_TAUS: [f64; 5] = [2e-3, 1e-3, 5e-4, 2.5e-4, 1.25e-4];
pub const DEFAULT_SWEEP_NS: [usize; 5] = [20, 80, 320, 1280, 5120];
pub const DEFAULT_ORACLE_NS: [usize; 5] = [8, 16, 32, 64, 128];
pub const DEFAULT_SOLVE_STEPS: usize = 100;

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self::default();
        match preset {
            Preset::Paper83 => base,
            Preset::PaperFig1 => Self {
                solver: Solver::Reference,
                ..base
            },
            Preset::ManufacturedQuadratic => Self {
                manufactured: Some(2.0),
                ..base
            },
            Preset::Commuting => Self {
                instance_kind: InstanceKind::Commuting,
                ..base
            },
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Parsed<()> {
        let v = value.trim();
        match key {
            "potential" => {
                Potential::from_spec(v).map_err(|e| ConfigError::new(key, e.to_string()))?;
                self.potential = v.into();
            }
            "initial" => {
                InitialCondition::from_spec(v).map_err(|e| ConfigError::new(key, e.to_string()))?;
                self.initial = v.into();
            }
            "x_min" => self.x_min = number(key, v)?,
            "x_max" => self.x_max = number(key, v)?,
            "grid" => self.grid = integer(key, v)?,
            "scheme" => self.scheme = parse_scheme(v).map_err(|m| ConfigError::new(key, m))?,
            "diffusion" => {
                self.diffusion = match v {
                    "cn" | "crank-nicolson" => DiffusionSubstep::CrankNicolson,
                    "exact" => DiffusionSubstep::Exact,
                    _ => return Err(ConfigError::new(key, format!("expected `cn` or `exact`, got `{v}`"))),
                }
            }
            "solver" => {
                self.solver = match v {
                    "reference" => Solver::Reference,
                    "split" => Solver::Split,
                    _ => return Err(ConfigError::new(key, format!("expected `reference` or `split`, got `{v}`"))),
                }
            }
            "t0" => self.t0 = number(key, v)?,
            "t_end" | "t" => self.t_end = number(key, v)?,
            "n" => self.set_time(key, TimeSteps::Counts(list(key, v, integer)?))?,
            "taus" | "tau" => self.set_time(key, TimeSteps::Taus(list(key, v, number)?))?,
            "times" => self.times = list(key, v, number)?,
            "ms" => self.ms = list(key, v, integer)?,
            "ref_factor" => self.ref_factor = integer(key, v)?,
            "norm" => self.norm = parse_norm(v).map_err(|m| ConfigError::new(key, m))?,
            "ref_refine" => {
                self.reference = match integer(key, v)? {
                    0 => return Err(ConfigError::new(key, "refinement factor must be at least 1")),
                    1 => ReferenceGrid::SameGrid,
                    k => ReferenceGrid::Refined(k),
                }
            }
            "seed" => self.seed = integer(key, v)? as u64,
            "dim" => self.dim = integer(key, v)?,
            "instances" => self.instances = integer(key, v)?,
            "alpha" => self.alpha = number(key, v)?,
            "matrix_t" => self.matrix_t = number(key, v)?,
            "instance_kind" => {
                self.instance_kind = match v {
                    "random" => InstanceKind::Random,
                    "commuting" => InstanceKind::Commuting,
                    _ => return Err(ConfigError::new(key, format!("expected `random` or `commuting`, got `{v}`"))),
                }
            }
            "manufactured" => self.manufactured = Some(number(key, v)?),
            "out" => self.out = PathBuf::from(v),
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    fn set_time(&mut self, key: &str, steps: TimeSteps) -> Parsed<()> {
        let same_kind = matches!(
            (&self.time, &steps),
            (None, _) | (Some(TimeSteps::Counts(_)), TimeSteps::Counts(_)) | (Some(TimeSteps::Taus(_)), TimeSteps::Taus(_))
        );
        if !same_kind {
            return Err(ConfigError::new(key, "give either `n` or `taus`, not both"));
        }
        self.time = Some(steps);
        Ok(())
    }

    /// Builds a configuration from file text. A `preset` line, wherever it
    /// appears, selects the base the other lines modify.
    pub fn parse(text: &str, preset_override: Option<Preset>) -> Parsed<Self> {
        let mut entries = Vec::new();
        let mut preset = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            if key == "preset" {
                preset = Some(Preset::from_name(value)?);
            } else {
                entries.push((key.to_string(), value.to_string()));
            }
        }
        let mut cfg = match preset_override.or(preset) {
            Some(p) => Self::preset(p),
            None => Self::default(),
        };
        for (key, value) in entries {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    /// Checks fields shared by every command.
    pub fn validate(&self) -> Parsed<()> {
        if !(self.x_min < self.x_max) {
            return Err(ConfigError::new("x_min", "must be below x_max"));
        }
        if self.grid < 3 {
            return Err(ConfigError::new("grid", "needs at least 3 points"));
        }
        if !(self.t0 <= self.t_end) {
            return Err(ConfigError::new("t_end", "must not precede t0"));
        }
        if let Some(TimeSteps::Taus(taus)) = &self.time {
            if taus.iter().any(|&t| !(t > 0.0)) {
                return Err(ConfigError::new("taus", "step sizes must be positive"));
            }
        }
        if let Some(TimeSteps::Counts(ns)) = &self.time {
            if ns.iter().any(|&n| n == 0) {
                return Err(ConfigError::new("n", "step counts must be positive"));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Parsed<PdeProblem> {
        self.validate()?;
        Ok(PdeProblem {
            grid: Grid1D::new(self.x_min, self.x_max, self.grid).map_err(|e| ConfigError::new("grid", e.to_string()))?,
            potential: Potential::from_spec(&self.potential).map_err(|e| ConfigError::new("potential", e.to_string()))?,
            initial: InitialCondition::from_spec(&self.initial).map_err(|e| ConfigError::new("initial", e.to_string()))?,
            t0: self.t0,
        })
    }

    /// Step lengths: configured ones, or `(t_end - t0) / n` for configured
    /// counts, or `default`.
    pub fn taus_or(&self, default: &[f64]) -> Vec<f64> {
        match &self.time {
            Some(TimeSteps::Taus(t)) => t.clone(),
            Some(TimeSteps::Counts(ns)) => ns.iter().map(|&n| (self.t_end - self.t0) / n as f64).collect(),
            None => default.to_vec(),
        }
    }

    /// Step counts: configured ones, or the counts matching configured step
    /// lengths over `[t0, t_end]`, or `default`.
    pub fn counts_or(&self, default: &[usize]) -> Parsed<Vec<usize>> {
        self.counts_over(self.t0, self.t_end, default)
    }

    /// As [`ExperimentConfig::counts_or`] over `[s, t]`.
    pub fn counts_over(&self, s: f64, t: f64, default: &[usize]) -> Parsed<Vec<usize>> {
        match &self.time {
            Some(TimeSteps::Counts(ns)) => Ok(ns.clone()),
            Some(TimeSteps::Taus(taus)) => taus
                .iter()
                .map(|&tau| {
                    let n = ((t - s) / tau).round();
                    if n >= 1.0 && ((s + n * tau) - t).abs() <= 1e-9 * t.abs().max(1.0) {
                        Ok(n as usize)
                    } else {
                        Err(ConfigError::new("taus", format!("step {tau} does not divide [{s}, {t}]")))
                    }
                })
                .collect(),
            None => Ok(default.to_vec()),
        }
    }
}

fn number(key: &str, v: &str) -> Parsed<f64> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ConfigError::new(key, format!("expected a number, got `{v}`"))),
    }
}

fn integer(key: &str, v: &str) -> Parsed<usize> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::new(key, format!("expected a nonnegative integer, got `{v}`")))
}

fn list<T>(key: &str, v: &str, item: fn(&str, &str) -> Parsed<T>) -> Parsed<Vec<T>> {
    let out = v
        .split(',')
        .map(|s| item(key, s))
        .collect::<Parsed<Vec<T>>>()?;
    if out.is_empty() {
        return Err(ConfigError::new(key, "empty list"));
    }
    Ok(out)
}

pub fn parse_norm(v: &str) -> std::result::Result<NormKind, String> {
    match v.trim() {
        "l2" | "L2" | "discrete-l2" => Ok(NormKind::DiscreteL2),
        "max" | "inf" => Ok(NormKind::Max),
        other => Err(format!("expected `l2` or `max`, got `{other}`")),
    }
}

pub fn parse_scheme(v: &str) -> std::result::Result<SplitScheme, String> {
    match v.trim().split_once(':') {
        None if v.trim() == "sequential" => Ok(SplitScheme::sequential()),
        None if v.trim() == "strang" => Ok(SplitScheme::strang()),
        Some(("weighted", theta)) => theta
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("bad weight `{theta}`"))
            .and_then(|t| SplitScheme::weighted(t).map_err(|e| e.to_string())),
        _ => Err(format!("expected `sequential`, `strang` or `weighted:<theta>`, got `{}`", v.trim())),
    }
}
