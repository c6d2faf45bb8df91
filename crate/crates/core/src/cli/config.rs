//! Experiment configuration: a TOML file with `[grid]`, `[potential]` and
//! `[experiment]` sections.
//!
//! Defaults: `grid = (12, 1024)`, `hbar = 1`, `window = 1`, `s = 0`, `t = 1`,
//! uniform subdivisions with `slices = [4, 8, 16, 32]`,
//! `dts = [1/4, 1/8, 1/16, 1/32]`, 4096 reference substeps per unit time,
//! tolerance 0.3, seed 0, a unit-width Gaussian packet at rest at the origin,
//! output directory `pathslice-out`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::action::DEFAULT_MAX_ORDER;
use crate::error::{Error, Result};
use crate::grid::{gaussian_packet, random_band_limited, Grid, WaveFunction};
use crate::potential::{make_low_regularity_potential, PotentialModel};
use crate::reference::ReferenceConfig;
use crate::slicing::{Scheme, StudyConfig, DEFAULT_TOLERANCE};

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

/// One table with the keys read so far, so leftovers can be rejected.
struct Section<'a> {
    name: &'a str,
    table: Table,
    seen: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, value: Option<Value>) -> Result<Self> {
        let table = match value {
            None => Table::new(),
            Some(Value::Table(t)) => t,
            Some(_) => return Err(invalid(name, "must be a table")),
        };
        Ok(Section {
            name,
            table,
            seen: BTreeSet::new(),
        })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn get(&mut self, k: &str) -> Option<&Value> {
        self.seen.insert(k.to_string());
        self.table.get(k)
    }

    fn float(&mut self, k: &str, default: Option<f64>) -> Result<f64> {
        let key = self.key(k);
        match self.get(k) {
            None => default.ok_or_else(|| invalid(&key, "is required")),
            Some(Value::Float(v)) if v.is_finite() => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(_) => Err(invalid(&key, "must be a finite number")),
        }
    }

    fn uint(&mut self, k: &str, default: Option<usize>) -> Result<usize> {
        let key = self.key(k);
        match self.get(k) {
            None => default.ok_or_else(|| invalid(&key, "is required")),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => Err(invalid(&key, "must be a nonnegative integer")),
        }
    }

    fn string(&mut self, k: &str, default: Option<&str>) -> Result<String> {
        let key = self.key(k);
        match self.get(k) {
            None => default.map(str::to_string).ok_or_else(|| invalid(&key, "is required")),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(invalid(&key, "must be a string")),
        }
    }

    fn floats(&mut self, k: &str, default: Option<Vec<f64>>) -> Result<Vec<f64>> {
        let key = self.key(k);
        match self.get(k) {
            None => default.ok_or_else(|| invalid(&key, "is required")),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) if x.is_finite() => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(invalid(&key, "must be an array of finite numbers")),
                })
                .collect(),
            Some(_) => Err(invalid(&key, "must be an array of numbers")),
        }
    }

    fn uints(&mut self, k: &str, default: Option<Vec<usize>>) -> Result<Vec<usize>> {
        let key = self.key(k);
        match self.get(k) {
            None => default.ok_or_else(|| invalid(&key, "is required")),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(x) if *x > 0 => Ok(*x as usize),
                    _ => Err(invalid(&key, "must be an array of positive integers")),
                })
                .collect(),
            Some(_) => Err(invalid(&key, "must be an array of integers")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.seen.contains(*k)) {
            Some(k) => Err(invalid(&self.key(k), "unknown key")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

/// Potential description as written in the config.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Linear { a: f64 },
    Harmonic { kappa: f64 },
    Cosine { a: f64, b: f64 },
    FourierSeries { amplitudes: Vec<f64>, frequencies: Vec<f64> },
    LowRegularity { order: usize, terms: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Gaussian { center: f64, momentum: f64, width: f64 },
    /// Unit-norm random band-limited state drawn from the experiment seed.
    Random { band: f64, width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    /// Polynomial coefficients of the time envelope; absent means static.
    pub envelope: Option<Vec<f64>>,
    pub budget: Option<usize>,
    pub order: usize,
    pub hbar: f64,
    pub window: f64,
    pub s: f64,
    pub t: f64,
    pub scheme: Scheme,
    pub slices: Vec<usize>,
    pub dts: Vec<f64>,
    pub substeps: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub state: StateSpec,
    /// Points per axis of the action-table sample.
    pub table_points: usize,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.half_width, self.grid.points).expect("validated at load")
    }

    pub fn model(&self) -> Result<PotentialModel> {
        let base = match &self.potential {
            PotentialSpec::Zero => PotentialModel::zero(),
            PotentialSpec::Linear { a } => PotentialModel::linear(*a),
            PotentialSpec::Harmonic { kappa } => PotentialModel::harmonic(*kappa),
            PotentialSpec::Cosine { a, b } => PotentialModel::cosine(*a, *b),
            PotentialSpec::FourierSeries { amplitudes, frequencies } => {
                PotentialModel::fourier_series(amplitudes.clone(), frequencies.clone())?
            }
            PotentialSpec::LowRegularity { order, terms } => make_low_regularity_potential(*order, *terms)?,
        };
        let model = match &self.envelope {
            Some(e) => PotentialModel::time_modulated(base, e.clone())?,
            None => base,
        };
        Ok(match self.budget {
            Some(b) => model.with_budget(b),
            None => model,
        })
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        let grid = self.grid();
        match self.state {
            StateSpec::Gaussian { center, momentum, width } => gaussian_packet(&grid, center, momentum, width, self.hbar),
            StateSpec::Random { band, width } => random_band_limited(&grid, self.seed, band, width),
        }
    }

    pub fn study(&self) -> Result<StudyConfig> {
        Ok(StudyConfig {
            window: self.window,
            reference: ReferenceConfig::new(self.substeps, self.hbar)?,
            tolerance: self.tolerance,
        })
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| invalid("<document>", e.message().to_string()))?;
    let grid = Section::new("grid", root.remove("grid"))?;
    let potential = Section::new("potential", root.remove("potential"))?;
    let experiment = Section::new("experiment", root.remove("experiment"))?;
    if let Some(k) = root.keys().next() {
        return Err(invalid(k, "unknown section or key"));
    }
    let grid = read_grid(grid)?;
    let (potential, envelope, budget) = read_potential(potential)?;
    let mut cfg = read_experiment(experiment, grid, potential, envelope, budget)?;
    cfg.validate()?;
    if cfg.output.as_os_str().is_empty() {
        cfg.output = PathBuf::from("pathslice-out");
    }
    Ok(cfg)
}

fn read_grid(mut sec: Section) -> Result<GridSpec> {
    let half_width = sec.float("half_width", Some(12.0))?;
    let points = sec.uint("points", Some(1024))?;
    sec.finish()?;
    if !(half_width > 0.0) {
        return Err(invalid("grid.half_width", "must be positive"));
    }
    if points < 8 || !points.is_power_of_two() {
        return Err(invalid("grid.points", format!("must be a power of two >= 8, got {points}")));
    }
    Ok(GridSpec { half_width, points })
}

fn read_potential(mut sec: Section) -> Result<(PotentialSpec, Option<Vec<f64>>, Option<usize>)> {
    let kind = sec.string("kind", None)?;
    let spec = match kind.as_str() {
        "zero" => PotentialSpec::Zero,
        "linear" => PotentialSpec::Linear {
            a: sec.float("a", Some(1.0))?,
        },
        "harmonic" => PotentialSpec::Harmonic {
            kappa: sec.float("kappa", Some(1.0))?,
        },
        "cosine" => PotentialSpec::Cosine {
            a: sec.float("a", Some(1.0))?,
            b: sec.float("b", Some(1.0))?,
        },
        "fourier_series" => {
            let amplitudes = sec.floats("amplitudes", None)?;
            let frequencies = sec.floats("frequencies", None)?;
            if amplitudes.len() != frequencies.len() || amplitudes.is_empty() {
                return Err(invalid("potential.frequencies", "must be nonempty and match potential.amplitudes in length"));
            }
            PotentialSpec::FourierSeries { amplitudes, frequencies }
        }
        "low_regularity" => {
            let order = sec.uint("order", None)?;
            let terms = sec.uint("terms", Some(64))?;
            if order == 0 {
                return Err(invalid("potential.order", "must be at least 1"));
            }
            if terms == 0 {
                return Err(invalid("potential.terms", "must be at least 1"));
            }
            PotentialSpec::LowRegularity { order, terms }
        }
        other => {
            return Err(invalid(
                "potential.kind",
                format!("unknown kind {other:?}; expected zero, linear, harmonic, cosine, fourier_series or low_regularity"),
            ))
        }
    };
    let envelope = match sec.get("envelope") {
        None => None,
        Some(_) => {
            let e = sec.floats("envelope", None)?;
            if e.is_empty() {
                return Err(invalid("potential.envelope", "must have at least one coefficient"));
            }
            Some(e)
        }
    };
    let budget = match sec.get("budget") {
        None => None,
        Some(_) => Some(sec.uint("budget", None)?),
    };
    sec.finish()?;
    Ok((spec, envelope, budget))
}

fn read_experiment(
    mut sec: Section,
    grid: GridSpec,
    potential: PotentialSpec,
    envelope: Option<Vec<f64>>,
    budget: Option<usize>,
) -> Result<ExperimentConfig> {
    let order = sec.uint("order", None)?;
    let hbar = sec.float("hbar", Some(1.0))?;
    let window = sec.float("window", Some(1.0))?;
    let s = sec.float("s", Some(0.0))?;
    let t = sec.float("t", Some(1.0))?;
    let seed = sec.uint("seed", Some(0))? as u64;
    let scheme = match sec.string("scheme", Some("uniform"))?.as_str() {
        "uniform" => {
            if sec.table.contains_key("jitter") {
                return Err(invalid("experiment.jitter", "only applies to the random scheme"));
            }
            Scheme::Uniform
        }
        "random" => Scheme::Random {
            seed,
            jitter: sec.float("jitter", Some(0.2))?,
        },
        other => return Err(invalid("experiment.scheme", format!("unknown scheme {other:?}; expected uniform or random"))),
    };
    let slices = sec.uints("slices", Some(vec![4, 8, 16, 32]))?;
    let dts = sec.floats("dts", Some(vec![0.25, 0.125, 0.0625, 0.03125]))?;
    let substeps = sec.uint("substeps", Some(crate::reference::DEFAULT_SUBSTEPS))?;
    let tolerance = sec.float("tolerance", Some(DEFAULT_TOLERANCE))?;
    let state = match sec.string("state", Some("gaussian"))?.as_str() {
        "gaussian" => StateSpec::Gaussian {
            center: sec.float("center", Some(0.0))?,
            momentum: sec.float("momentum", Some(0.0))?,
            width: sec.float("width", Some(1.0))?,
        },
        "random" => StateSpec::Random {
            band: sec.float("band", Some(1.0))?,
            width: sec.float("width", Some(1.0))?,
        },
        other => return Err(invalid("experiment.state", format!("unknown state {other:?}; expected gaussian or random"))),
    };
    let table_points = sec.uint("table_points", Some(32))?;
    let output = PathBuf::from(sec.string("output", Some("pathslice-out"))?);
    sec.finish()?;
    Ok(ExperimentConfig {
        grid,
        potential,
        envelope,
        budget,
        order,
        hbar,
        window,
        s,
        t,
        scheme,
        slices,
        dts,
        substeps,
        tolerance,
        seed,
        state,
        table_points,
        output,
    })
}

impl ExperimentConfig {
    /// Canonical TOML for this config; parsing it yields an equal config.
    pub fn to_toml(&self) -> String {
        fn floats(v: &[f64]) -> Value {
            Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
        }
        let mut grid = Table::new();
        grid.insert("half_width".into(), Value::Float(self.grid.half_width));
        grid.insert("points".into(), Value::Integer(self.grid.points as i64));

        let mut pot = Table::new();
        let kind = match &self.potential {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Linear { a } => {
                pot.insert("a".into(), Value::Float(*a));
                "linear"
            }
            PotentialSpec::Harmonic { kappa } => {
                pot.insert("kappa".into(), Value::Float(*kappa));
                "harmonic"
            }
            PotentialSpec::Cosine { a, b } => {
                pot.insert("a".into(), Value::Float(*a));
                pot.insert("b".into(), Value::Float(*b));
                "cosine"
            }
            PotentialSpec::FourierSeries { amplitudes, frequencies } => {
                pot.insert("amplitudes".into(), floats(amplitudes));
                pot.insert("frequencies".into(), floats(frequencies));
                "fourier_series"
            }
            PotentialSpec::LowRegularity { order, terms } => {
                pot.insert("order".into(), Value::Integer(*order as i64));
                pot.insert("terms".into(), Value::Integer(*terms as i64));
                "low_regularity"
            }
        };
        pot.insert("kind".into(), Value::String(kind.into()));
        if let Some(e) = &self.envelope {
            pot.insert("envelope".into(), floats(e));
        }
        if let Some(b) = self.budget {
            pot.insert("budget".into(), Value::Integer(b as i64));
        }

        let mut exp = Table::new();
        exp.insert("order".into(), Value::Integer(self.order as i64));
        exp.insert("hbar".into(), Value::Float(self.hbar));
        exp.insert("window".into(), Value::Float(self.window));
        exp.insert("s".into(), Value::Float(self.s));
        exp.insert("t".into(), Value::Float(self.t));
        exp.insert("seed".into(), Value::Integer(self.seed as i64));
        match self.scheme {
            Scheme::Uniform => {
                exp.insert("scheme".into(), Value::String("uniform".into()));
            }
            Scheme::Random { jitter, .. } => {
                exp.insert("scheme".into(), Value::String("random".into()));
                exp.insert("jitter".into(), Value::Float(jitter));
            }
        }
        exp.insert(
            "slices".into(),
            Value::Array(self.slices.iter().map(|l| Value::Integer(*l as i64)).collect()),
        );
        exp.insert("dts".into(), floats(&self.dts));
        exp.insert("substeps".into(), Value::Integer(self.substeps as i64));
        exp.insert("tolerance".into(), Value::Float(self.tolerance));
        match self.state {
            StateSpec::Gaussian { center, momentum, width } => {
                exp.insert("state".into(), Value::String("gaussian".into()));
                exp.insert("center".into(), Value::Float(center));
                exp.insert("momentum".into(), Value::Float(momentum));
                exp.insert("width".into(), Value::Float(width));
            }
            StateSpec::Random { band, width } => {
                exp.insert("state".into(), Value::String("random".into()));
                exp.insert("band".into(), Value::Float(band));
                exp.insert("width".into(), Value::Float(width));
            }
        }
        exp.insert("table_points".into(), Value::Integer(self.table_points as i64));
        exp.insert("output".into(), Value::String(self.output.to_string_lossy().into_owned()));

        let mut root = Table::new();
        root.insert("grid".into(), Value::Table(grid));
        root.insert("potential".into(), Value::Table(pot));
        root.insert("experiment".into(), Value::Table(exp));
        toml::to_string(&root).expect("plain tables serialize")
    }
}

fn dyadic(ratios: impl Iterator<Item = f64>) -> bool {
    ratios.into_iter().all(|r| (r - 2.0).abs() <= 1e-9)
}

impl ExperimentConfig {
    /// Re-checks every module precondition the commands rely on.
    fn validate(&self) -> Result<()> {
        let model = self.model().map_err(|e| invalid("potential", e.to_string()))?;
        if self.order == 0 {
            return Err(invalid("experiment.order", "must be at least 1"));
        }
        if 2 * self.order > model.budget() {
            return Err(invalid(
                "experiment.order",
                format!(
                    "N = {} needs the potential to provide 2N = {} derivatives (with their time derivatives), but its budget is {}",
                    self.order,
                    2 * self.order,
                    model.budget()
                ),
            ));
        }
        if self.order > DEFAULT_MAX_ORDER {
            return Err(invalid("experiment.order", format!("at most {DEFAULT_MAX_ORDER} is supported, got {}", self.order)));
        }
        if !(self.hbar > 0.0 && self.hbar <= 1.0) {
            return Err(invalid("experiment.hbar", format!("must lie in (0, 1], got {}", self.hbar)));
        }
        if !(self.window > 0.0) {
            return Err(invalid("experiment.window", "must be positive"));
        }
        if !(self.t > self.s) {
            return Err(invalid("experiment.t", format!("must exceed experiment.s = {}", self.s)));
        }
        if let Scheme::Random { jitter, .. } = self.scheme {
            if !(0.0..0.4).contains(&jitter) {
                return Err(invalid("experiment.jitter", format!("must lie in [0, 0.4), got {jitter}")));
            }
        }
        if self.slices.len() < 3 || !dyadic(self.slices.windows(2).map(|w| w[1] as f64 / w[0] as f64)) {
            return Err(invalid("experiment.slices", "must be an increasing dyadic ladder of at least three entries"));
        }
        let smallest = self.slices[0] as f64;
        if (self.t - self.s) / smallest > self.window * self.hbar * (1.0 + 1e-12) {
            return Err(invalid(
                "experiment.slices",
                format!("slices of width (t - s)/{smallest} exceed the window T*hbar = {}", self.window * self.hbar),
            ));
        }
        if self.dts.len() < 3 || self.dts.iter().any(|d| !(*d > 0.0)) || !dyadic(self.dts.windows(2).map(|w| w[0] / w[1])) {
            return Err(invalid("experiment.dts", "must be a decreasing dyadic ladder of at least three positive steps"));
        }
        if self.dts[0] > self.window * self.hbar * (1.0 + 1e-12) {
            return Err(invalid("experiment.dts", format!("steps must not exceed the window T*hbar = {}", self.window * self.hbar)));
        }
        if self.substeps < 256 {
            return Err(invalid("experiment.substeps", "must be at least 256"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(invalid("experiment.tolerance", "must be nonnegative"));
        }
        match self.state {
            StateSpec::Gaussian { width, .. } if !(width > 0.0) => {
                return Err(invalid("experiment.width", "must be positive"));
            }
            StateSpec::Random { band, width } => {
                if !(band > 0.0 && band <= self.grid().nyquist()) {
                    return Err(invalid("experiment.band", "must lie in (0, Nyquist]"));
                }
                if !(width > 0.0) {
                    return Err(invalid("experiment.width", "must be positive"));
                }
            }
            _ => {}
        }
        if self.table_points < 2 || self.table_points > self.grid.points {
            return Err(invalid("experiment.table_points", format!("must lie in [2, {}]", self.grid.points)));
        }
        Ok(())
    }
}
