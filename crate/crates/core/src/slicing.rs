//! Subdivisions, the composed propagator `E^(N)(Omega, t, s)` and the
//! refinement studies measured against the reference solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::ActionExpansion;
use crate::error::{Error, Result};
use crate::grid::{l2_distance, ConvergenceReport, WaveFunction};
use crate::oio::{step_for_slice, validate_slice, PropagatorStep, DEFAULT_WINDOW};
use crate::potential::PotentialModel;
use crate::reference::{reference_with_estimate, refine, ReferenceConfig};

/// Errors at or below this are treated as exact (no slope can be fitted).
pub const ERROR_FLOOR: f64 = 1e-11;
/// Reference self-error allowed, as a fraction of the smallest fitted error.
pub const REFERENCE_BUDGET: f64 = 0.01;
pub const DEFAULT_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    Uniform,
    /// Interior points moved by `U(-jitter/2, jitter/2)` slice widths.
    Random { seed: u64, jitter: f64 },
}

/// `s = t_0 < t_1 < ... < t_L = t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subdivision {
    times: Vec<f64>,
}

impl Subdivision {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::config("a subdivision needs at least one slice"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("subdivision times must be finite and strictly increasing"));
        }
        Ok(Subdivision { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of slices `L`.
    pub fn slices(&self) -> usize {
        self.times.len() - 1
    }

    /// `omega(Omega) = max_j (t_j - t_{j-1})`.
    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

pub fn make_subdivision(s: f64, t: f64, slices: usize, scheme: Scheme) -> Result<Subdivision> {
    if !(t > s) {
        return Err(Error::TimeOrder { s, t });
    }
    if slices == 0 {
        return Err(Error::config("subdivision needs L >= 1"));
    }
    let width = (t - s) / slices as f64;
    let uniform = |j: usize| if j == slices { t } else { s + j as f64 * width };
    match scheme {
        Scheme::Uniform => Subdivision::new((0..=slices).map(uniform).collect()),
        Scheme::Random { seed, jitter } => {
            if !(0.0..0.4).contains(&jitter) {
                return Err(Error::config(format!("jitter must lie in [0, 0.4), got {jitter}")));
            }
            let mut seed = seed;
            loop {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut times: Vec<f64> = (0..=slices)
                    .map(|j| {
                        if j == 0 || j == slices {
                            uniform(j)
                        } else {
                            uniform(j) + jitter * width * rng.random_range(-0.5..0.5)
                        }
                    })
                    .collect();
                times.sort_by(f64::total_cmp);
                if let Ok(sub) = Subdivision::new(times) {
                    return Ok(sub);
                }
                seed = seed.wrapping_add(1);
            }
        }
    }
}

/// `E^(N)(t_L, t_{L-1}) ... E^(N)(t_1, t_0) f` with `N`, `hbar` and the grid
/// taken from `expansion`. For time-dependent potentials the expansion is
/// rebuilt at every left endpoint.
pub fn apply_time_sliced_with(
    expansion: &ActionExpansion,
    f: &WaveFunction,
    omega: &Subdivision,
    window: f64,
) -> Result<WaveFunction> {
    f.grid().check_same(expansion.grid())?;
    let times = omega.times();
    for (j, w) in times.windows(2).enumerate() {
        validate_slice(w[0], w[1], expansion.hbar(), window, j)?;
    }
    let time_dependent = expansion.model().is_time_dependent();
    let mut u = f.clone();
    let mut cached: Option<(f64, PropagatorStep)> = None;
    for (j, w) in times.windows(2).enumerate() {
        let (s, t) = (w[0], w[1]);
        let dt = t - s;
        let step = if time_dependent {
            step_for_slice(&expansion.at(s)?, t, s, window, j)?
        } else {
            match cached.take() {
                // Uniform meshes reuse one kernel; widths agree to rounding.
                Some((prev, step)) if (prev - dt).abs() <= 1e-13 * dt => step,
                _ => step_for_slice(expansion, t, s, window, j)?,
            }
        };
        u = step.apply(&u)?;
        if !time_dependent {
            cached = Some((dt, step));
        }
    }
    Ok(u)
}

/// [`apply_time_sliced_with`] for a freshly built expansion on `f`'s grid.
pub fn apply_time_sliced(
    model: &PotentialModel,
    order: usize,
    f: &WaveFunction,
    omega: &Subdivision,
    hbar: f64,
) -> Result<WaveFunction> {
    let expansion = ActionExpansion::new(model.clone(), order, omega.start(), hbar, *f.grid())?;
    apply_time_sliced_with(&expansion, f, omega, DEFAULT_WINDOW)
}

/// Settings shared by the refinement studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyConfig {
    pub window: f64,
    pub reference: ReferenceConfig,
    pub tolerance: f64,
}

impl StudyConfig {
    pub fn new(hbar: f64) -> Result<Self> {
        Ok(StudyConfig {
            window: DEFAULT_WINDOW,
            reference: ReferenceConfig::new(crate::reference::DEFAULT_SUBSTEPS, hbar)?,
            tolerance: DEFAULT_TOLERANCE,
        })
    }
}

fn check_dyadic<T: Copy>(values: &[T], ratio: impl Fn(T, T) -> f64, what: &str) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::config(format!("{what} needs at least three entries")));
    }
    if values.windows(2).any(|w| (ratio(w[0], w[1]) - 2.0).abs() > 1e-9) {
        return Err(Error::config(format!("{what} must be a dyadic ladder")));
    }
    Ok(())
}

fn check_degenerate(errors: &[f64], hint: &str) -> Result<()> {
    if let Some(e) = errors.iter().find(|&&e| e <= ERROR_FLOOR) {
        return Err(Error::DegenerateFit(format!(
            "error {e:.3e} is at the rounding floor; the approximation is exact here ({hint})"
        )));
    }
    Ok(())
}

/// Errors of `approximations` against one reference state, refining the
/// reference until its self-error is below 1% of the smallest error.
fn errors_against_reference(
    model: &PotentialModel,
    f: &WaveFunction,
    s: f64,
    t: f64,
    approximations: &[WaveFunction],
    cfg: &StudyConfig,
    hint: &str,
) -> Result<Vec<f64>> {
    let mut run = reference_with_estimate(model, f, s, t, &cfg.reference)?;
    loop {
        let errors = approximations
            .iter()
            .map(|a| l2_distance(a, &run.state))
            .collect::<Result<Vec<f64>>>()?;
        check_degenerate(&errors, hint)?;
        let smallest = errors.iter().cloned().fold(f64::INFINITY, f64::min);
        if run.self_error <= REFERENCE_BUDGET * smallest {
            return Ok(errors);
        }
        run = refine(model, f, s, t, &run)?;
    }
}

/// Errors of the uniform compositions `E^(N)(Omega_L)` on `[s, t]` for each
/// `L` in the dyadic ladder, fitted against the mesh; target order `N`.
pub fn convergence_study(
    model: &PotentialModel,
    order: usize,
    f: &WaveFunction,
    s: f64,
    t: f64,
    ladder: &[usize],
    hbar: f64,
    cfg: &StudyConfig,
) -> Result<ConvergenceReport> {
    convergence_study_with_scheme(model, order, f, s, t, ladder, Scheme::Uniform, hbar, cfg)
}

/// As [`convergence_study`] with subdivisions drawn from `scheme`; the fit
/// uses the realised mesh of each subdivision.
pub fn convergence_study_with_scheme(
    model: &PotentialModel,
    order: usize,
    f: &WaveFunction,
    s: f64,
    t: f64,
    ladder: &[usize],
    scheme: Scheme,
    hbar: f64,
    cfg: &StudyConfig,
) -> Result<ConvergenceReport> {
    check_dyadic(ladder, |a, b| b as f64 / a as f64, "slice ladder")?;
    let expansion = ActionExpansion::new(model.clone(), order, s, hbar, *f.grid())?;
    let mut meshes = Vec::new();
    let mut approximations = Vec::new();
    for &l in ladder {
        let omega = make_subdivision(s, t, l, scheme)?;
        meshes.push(omega.mesh());
        approximations.push(apply_time_sliced_with(&expansion, f, &omega, cfg.window)?);
    }
    let errors = errors_against_reference(model, f, s, t, &approximations, cfg, "shrink t - s or use a nonzero potential")?;
    ConvergenceReport::from_series(
        ladder.iter().map(|l| format!("L={l}")).collect(),
        meshes,
        errors,
        order as f64,
        cfg.tolerance,
    )
}

/// Errors of single steps `E^(N)(s + dt, s)` for each `dt` in the dyadic
/// ladder; target order `N + 1`.
pub fn single_step_study(
    model: &PotentialModel,
    order: usize,
    f: &WaveFunction,
    s: f64,
    dts: &[f64],
    hbar: f64,
    cfg: &StudyConfig,
) -> Result<ConvergenceReport> {
    check_dyadic(dts, |a, b| a / b, "step ladder")?;
    let expansion = ActionExpansion::new(model.clone(), order, s, hbar, *f.grid())?;
    let mut errors = Vec::new();
    for &dt in dts {
        let step = PropagatorStep::new(&expansion, s + dt, s, cfg.window)?;
        let approx = step.apply(f)?;
        let e = errors_against_reference(model, f, s, s + dt, &[approx], cfg, "the parametrix is exact for this potential")?;
        errors.push(e[0]);
    }
    ConvergenceReport::from_series(
        dts.iter().map(|dt| format!("dt={dt}")).collect(),
        dts.to_vec(),
        errors,
        order as f64 + 1.0,
        cfg.tolerance,
    )
}
