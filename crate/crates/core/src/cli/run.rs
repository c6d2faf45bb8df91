//! Command dispatch and result emission.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{write_json, write_text, Cell, Table};
use crate::action::{transport_residual, ActionExpansion};
use crate::error::{Error, Result};
use crate::grid::{l2_distance, random_band_limited, Grid, WaveFunction, Warning};
use crate::oio::{step_warnings, PropagatorStep};
use crate::parametrix::parametrix_norm_scan;
use crate::potential::verify_regularity;
use crate::reference::reference_propagate;
use crate::slicing::{convergence_study_with_scheme, make_subdivision, single_step_study};
use crate::timefreq::{
    frozen_amplitude_norm, modulation_norm, stft, wigner_ambiguity_check, PhaseSpaceLattice, FROZEN_NORM_CAP,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;
pub const EXIT_WARNING: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Converge,
    SingleStep,
    Parametrix,
    ActionTable,
    Norms,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::SingleStep => "single-step",
            Command::Parametrix => "parametrix",
            Command::ActionTable => "action-table",
            Command::Norms => "norms",
            Command::Verify => "verify",
        }
    }
}

/// Exit code for a failed run.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::DegenerateFit(_) => EXIT_DEGENERATE,
        Error::Validation { .. }
        | Error::Config(_)
        | Error::DerivativeBudget { .. }
        | Error::Index(_)
        | Error::TimeOrder { .. }
        | Error::Window { .. }
        | Error::Shape(_)
        | Error::Lattice(_) => EXIT_VALIDATION,
        Error::OracleResolution(_) | Error::Singular(_) | Error::Support(_) => EXIT_FAIL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: String,
    pub passed: bool,
    pub exit_code: i32,
    pub fitted_order: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub error_category: Option<String>,
    pub message: Option<String>,
    pub warnings: Vec<Warning>,
}

impl Summary {
    /// Summary for a run that failed before producing results.
    pub fn from_error(command: Command, e: &Error) -> Self {
        Summary {
            command: command.name().into(),
            passed: false,
            exit_code: exit_code_for(e),
            fitted_order: None,
            target: None,
            tolerance: None,
            error_category: Some(e.category().into()),
            message: Some(e.to_string()),
            warnings: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    strict: bool,
    seed: u64,
    config: &'a ExperimentConfig,
    /// The config as a file `pathslice` accepts; rerunning it reproduces the summary.
    config_toml: String,
}

struct Outcome {
    table: Table,
    /// Columns plotted in the `.dat` file.
    plot: Option<(usize, usize)>,
    extra: Vec<(&'static str, Table)>,
    fitted_order: Option<f64>,
    target: Option<f64>,
    tolerance: Option<f64>,
    passed: bool,
    warnings: Vec<Warning>,
}

impl Outcome {
    fn plain(table: Table, passed: bool) -> Self {
        Outcome {
            table,
            plot: None,
            extra: Vec::new(),
            fitted_order: None,
            target: None,
            tolerance: None,
            passed,
            warnings: Vec::new(),
        }
    }
}

/// Paths written by a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub dir: PathBuf,
}

/// Runs `command`, writes the manifest, CSV, `.dat` and summary into
/// `out` (or the configured output directory) and returns the summary.
pub fn run(cfg: &ExperimentConfig, command: Command, strict: bool, out: Option<&Path>) -> Result<RunOutput> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            tool: "pathslice",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            strict,
            seed: cfg.seed,
            config: cfg,
            config_toml: cfg.to_toml(),
        },
    )?;
    let stem = command.name();
    let summary = match execute(cfg, command) {
        Ok(o) => {
            write_text(&dir.join(format!("{stem}.csv")), &o.table.to_csv())?;
            if let Some((x, y)) = o.plot {
                write_text(&dir.join(format!("{stem}.dat")), &o.table.to_dat(x, y))?;
            }
            for (name, t) in &o.extra {
                write_text(&dir.join(format!("{name}.csv")), &t.to_csv())?;
            }
            let exit_code = if !o.passed {
                EXIT_FAIL
            } else if strict && !o.warnings.is_empty() {
                EXIT_WARNING
            } else {
                EXIT_PASS
            };
            Summary {
                command: stem.into(),
                passed: o.passed,
                exit_code,
                fitted_order: o.fitted_order,
                target: o.target,
                tolerance: o.tolerance,
                error_category: None,
                message: (exit_code == EXIT_WARNING).then(|| "resolution warnings escalated by --strict".to_string()),
                warnings: o.warnings,
            }
        }
        Err(Error::Io(m)) => return Err(Error::Io(m)),
        Err(e) => Summary::from_error(command, &e),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(RunOutput { summary, dir })
}

fn execute(cfg: &ExperimentConfig, command: Command) -> Result<Outcome> {
    match command {
        Command::Converge => converge(cfg),
        Command::SingleStep => single_step(cfg),
        Command::Parametrix => parametrix(cfg),
        Command::ActionTable => action_table(cfg),
        Command::Norms => norms(cfg),
        Command::Verify => verify(cfg),
    }
}

fn merge(into: &mut Vec<Warning>, from: impl IntoIterator<Item = Warning>) {
    for w in from {
        if !into.contains(&w) {
            into.push(w);
        }
    }
}

fn converge(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let f = cfg.initial_state()?;
    let report = convergence_study_with_scheme(
        &model,
        cfg.order,
        &f,
        cfg.s,
        cfg.t,
        &cfg.slices,
        cfg.scheme,
        cfg.hbar,
        &cfg.study()?,
    )?;
    let finest = make_subdivision(cfg.s, cfg.t, *cfg.slices.last().expect("validated"), cfg.scheme)?;
    let narrowest = finest.times().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut warnings = f.warnings.clone();
    merge(&mut warnings, step_warnings(f.grid(), narrowest, cfg.hbar, &f));
    let mut table = Table::new(&["slices", "mesh", "error"]);
    for ((l, mesh), err) in cfg.slices.iter().zip(&report.meshes).zip(&report.errors) {
        table.push(vec![Cell::Int(*l as i64), Cell::Real(*mesh), Cell::Real(*err)]);
    }
    Ok(Outcome {
        table,
        plot: Some((1, 2)),
        extra: Vec::new(),
        fitted_order: Some(report.fitted_order),
        target: Some(report.target_order),
        tolerance: Some(report.tolerance),
        passed: report.passed,
        warnings,
    })
}

fn single_step(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let f = cfg.initial_state()?;
    let report = single_step_study(&model, cfg.order, &f, cfg.s, &cfg.dts, cfg.hbar, &cfg.study()?)?;
    let mut warnings = f.warnings.clone();
    merge(&mut warnings, step_warnings(f.grid(), *cfg.dts.last().expect("validated"), cfg.hbar, &f));
    let mut table = Table::new(&["dt", "error"]);
    for (dt, err) in report.meshes.iter().zip(&report.errors) {
        table.push(vec![Cell::Real(*dt), Cell::Real(*err)]);
    }
    Ok(Outcome {
        table,
        plot: Some((0, 1)),
        extra: Vec::new(),
        fitted_order: Some(report.fitted_order),
        target: Some(report.target_order),
        tolerance: Some(report.tolerance),
        passed: report.passed,
        warnings,
    })
}

fn parametrix(cfg: &ExperimentConfig) -> Result<Outcome> {
    let scan = parametrix_norm_scan(&cfg.model()?, cfg.order, cfg.s, &cfg.dts, cfg.hbar, &cfg.grid(), cfg.tolerance)?;
    let mut table = Table::new(&["dt", "norm"]);
    for (dt, n) in scan.dts.iter().zip(&scan.norms) {
        table.push(vec![Cell::Real(*dt), Cell::Real(*n)]);
    }
    Ok(Outcome {
        table,
        plot: Some((0, 1)),
        extra: Vec::new(),
        fitted_order: Some(scan.fitted_order),
        target: Some(scan.target_order),
        tolerance: Some(scan.tolerance),
        passed: scan.passed,
        warnings: Vec::new(),
    })
}

fn action_table(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid();
    let exp = ActionExpansion::new(cfg.model()?, cfg.order, cfg.s, cfg.hbar, grid)?;
    let mut header = vec!["x".to_string(), "y".to_string()];
    for k in 1..=cfg.order {
        header.push(format!("W{k}_re"));
        header.push(format!("W{k}_im"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header);
    let p = cfg.table_points;
    let index = |i: usize| i * grid.len() / p;
    let mut finite = true;
    for i in 0..p {
        for j in 0..p {
            let (x, y) = (grid.x(index(i)), grid.x(index(j)));
            let mut row = vec![Cell::Real(x), Cell::Real(y)];
            for k in 1..=cfg.order {
                let w = exp.eval_w_derivative(k, 0, x, y)?;
                finite &= w.re.is_finite() && w.im.is_finite();
                row.push(Cell::Real(w.re));
                row.push(Cell::Real(w.im));
            }
            table.push(row);
        }
    }
    Ok(Outcome::plain(table, finite))
}

fn norms(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid();
    let model = cfg.model()?;
    let lattice = PhaseSpaceLattice::new(grid)?;
    let exp = ActionExpansion::new(model.clone(), cfg.order, cfg.s, cfg.hbar, grid)?;
    let mut table = Table::new(&["dt", "norm"]);
    let mut passed = true;
    for &dt in &cfg.dts {
        let n = frozen_amplitude_norm(&exp, cfg.s + dt, 0.0, &lattice)?;
        passed &= n.is_finite() && n <= FROZEN_NORM_CAP;
        table.push(vec![Cell::Real(dt), Cell::Real(n)]);
    }
    let report = verify_regularity(&model, cfg.order, &lattice)?;
    passed &= report.all_finite();
    let mut reg = Table::new(&["k", "alpha", "norm"]);
    for e in &report.entries {
        reg.push(vec![Cell::Int(e.k as i64), Cell::Int(e.alpha as i64), Cell::Real(e.norm)]);
    }
    let mut o = Outcome::plain(table, passed);
    o.plot = Some((0, 1));
    o.extra.push(("regularity", reg));
    Ok(o)
}

/// Number of random states in the boundedness check.
const BOUNDEDNESS_STATES: u64 = 32;

fn verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid();
    let model = cfg.model()?;
    let f = cfg.initial_state()?;
    let exp = ActionExpansion::new(model.clone(), cfg.order, cfg.s, cfg.hbar, grid)?;
    let mut table = Table::new(&["check", "value", "threshold", "passed"]);
    let mut all = true;
    let mut check = |name: String, value: f64, threshold: f64, ok: bool| {
        all &= ok;
        table.push(vec![Cell::Text(name), Cell::Real(value), Cell::Real(threshold), Cell::Int(ok as i64)]);
    };

    let coarse = Grid::new(grid.half_width(), 128.min(grid.len()))?;
    for k in 1..=cfg.order {
        let r = transport_residual(&exp, k, &coarse)?;
        check(format!("transport_w{k}"), r, 1e-6, r <= 1e-6);
    }

    let u = reference_propagate(&model, &f, cfg.s, cfg.s + cfg.dts[0], &cfg.study()?.reference)?;
    let drift = (u.norm() - f.norm()).abs();
    check("reference_unitarity".into(), drift, 1e-12, drift <= 1e-12);

    let mut identity = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let step = PropagatorStep::new(&exp, cfg.s + eps, cfg.s, cfg.window)?;
        identity.push(l2_distance(&step.apply(&f)?, &f)?);
    }
    check("identity_limit".into(), identity[1], 0.01, identity[1] <= 0.01);
    let ratio = identity.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    check("identity_limit_monotone".into(), ratio, 1.0, ratio < 1.0);

    let states = (0..BOUNDEDNESS_STATES)
        .map(|j| random_band_limited(&grid, cfg.seed.wrapping_add(j), 1.0, 1.0))
        .collect::<Result<Vec<WaveFunction>>>()?;
    let mut worst: f64 = 0.0;
    for &dt in &cfg.dts {
        let step = PropagatorStep::new(&exp, cfg.s + dt, cfg.s, cfg.window)?;
        for g in &states {
            worst = worst.max(step.apply(g)?.norm() / g.norm());
        }
    }
    check("boundedness".into(), worst, 2.0, worst <= 2.0);

    let lattice = PhaseSpaceLattice::new(grid)?;
    let mut frozen: f64 = 0.0;
    for &dt in &cfg.dts {
        frozen = frozen.max(frozen_amplitude_norm(&exp, cfg.s + dt, 0.0, &lattice)?);
    }
    check("frozen_norm".into(), frozen, FROZEN_NORM_CAP, frozen <= FROZEN_NORM_CAP);

    let moyal = (modulation_norm(&stft(&f, &lattice)?, 2.0, 2.0)? - f.norm()).abs();
    check("moyal".into(), moyal, 1e-6, moyal <= 1e-6);

    let wa = wigner_ambiguity_check(&f, lattice.window(), &lattice)?;
    let res = wa.ambiguity_residual.max(wa.wigner_residual);
    check("wigner_ambiguity".into(), res, 1e-6, res <= 1e-6);

    let reg = verify_regularity(&model, cfg.order, &lattice)?;
    check("regularity_finite".into(), reg.max_norm(), f64::INFINITY, reg.all_finite());

    let mut o = Outcome::plain(table, all);
    o.warnings = f.warnings.clone();
    Ok(o)
}
