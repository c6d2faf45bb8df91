//! Strang-split reference propagator `U(t, s)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{l2_distance, WaveFunction};
use crate::potential::PotentialModel;
use crate::spectral::{free_multiplier, Spectral};

pub const DEFAULT_SUBSTEPS: usize = 4096;
/// Largest substep rate the refinement loop will try.
pub const MAX_SUBSTEPS: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceConfig {
    /// Substeps per unit time.
    pub substeps: usize,
    pub hbar: f64,
}

impl ReferenceConfig {
    pub fn new(substeps: usize, hbar: f64) -> Result<Self> {
        if substeps < 256 {
            return Err(Error::config(format!("reference needs at least 256 substeps per unit time, got {substeps}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::config(format!("hbar must be positive, got {hbar}")));
        }
        Ok(ReferenceConfig { substeps, hbar })
    }

    /// Substep count for an interval of length `dt`.
    pub fn count(&self, dt: f64) -> usize {
        ((self.substeps as f64 * dt).ceil() as usize).max(1)
    }
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            substeps: DEFAULT_SUBSTEPS,
            hbar: 1.0,
        }
    }
}

/// `U(t, s) f` by `cfg.count(t - s)` Strang substeps with the potential
/// sampled at substep midpoints.
pub fn reference_propagate(
    model: &PotentialModel,
    f: &WaveFunction,
    s: f64,
    t: f64,
    cfg: &ReferenceConfig,
) -> Result<WaveFunction> {
    if !(t > s) {
        return Err(Error::TimeOrder { s, t });
    }
    Ok(strang(model, f, s, t, cfg.count(t - s), cfg.hbar))
}

pub(crate) fn strang(model: &PotentialModel, f: &WaveFunction, s: f64, t: f64, n: usize, hbar: f64) -> WaveFunction {
    let grid = *f.grid();
    let delta = (t - s) / n as f64;
    let fft = Spectral::new(grid.len());
    let kinetic = free_multiplier(&grid.frequencies(), delta, hbar);
    let spatial: Vec<f64> = grid.nodes().map(|x| model.spatial_derivative(0, x)).collect();
    let half_phase = |tm: f64| -> Vec<Complex64> {
        let e = model.envelope_derivative(0, tm);
        spatial
            .iter()
            .map(|v| Complex64::from_polar(1.0, -e * v * delta / (2.0 * hbar)))
            .collect()
    };
    let fixed = (!model.is_time_dependent()).then(|| half_phase(s));
    let mut u = f.values().to_vec();
    for j in 0..n {
        let owned;
        let phase = match &fixed {
            Some(p) => p,
            None => {
                owned = half_phase(s + (j as f64 + 0.5) * delta);
                &owned
            }
        };
        for (v, p) in u.iter_mut().zip(phase) {
            *v *= p;
        }
        fft.apply_multiplier(&mut u, &kinetic);
        for (v, p) in u.iter_mut().zip(phase) {
            *v *= p;
        }
    }
    let mut out = WaveFunction::with_values(grid, u);
    out.warnings = f.warnings.clone();
    out
}

/// Reference run with its own error estimate.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub state: WaveFunction,
    /// Substeps per unit time of the returned state.
    pub substeps: usize,
    /// `||u_n - u_2n|| / 3`, the Richardson estimate of the returned state's error.
    pub self_error: f64,
    hbar: f64,
}

/// Runs at `cfg.substeps` and twice that; returns the finer state.
pub fn reference_with_estimate(
    model: &PotentialModel,
    f: &WaveFunction,
    s: f64,
    t: f64,
    cfg: &ReferenceConfig,
) -> Result<ReferenceRun> {
    let coarse = reference_propagate(model, f, s, t, cfg)?;
    let fine_cfg = ReferenceConfig {
        substeps: 2 * cfg.substeps,
        ..*cfg
    };
    let fine = strang(model, f, s, t, fine_cfg.count(t - s), cfg.hbar);
    Ok(ReferenceRun {
        self_error: l2_distance(&coarse, &fine)? / 3.0,
        state: fine,
        substeps: fine_cfg.substeps,
        hbar: cfg.hbar,
    })
}

/// Doubles the substep rate of `run` once.
pub fn refine(
    model: &PotentialModel,
    f: &WaveFunction,
    s: f64,
    t: f64,
    run: &ReferenceRun,
) -> Result<ReferenceRun> {
    let substeps = 2 * run.substeps;
    if substeps > MAX_SUBSTEPS {
        return Err(Error::OracleResolution(format!(
            "reference self-error {:.3e} at {} substeps per unit time; refinement cap reached",
            run.self_error, run.substeps
        )));
    }
    let cfg = ReferenceConfig {
        substeps,
        hbar: run.hbar,
    };
    let fine = strang(model, f, s, t, cfg.count(t - s), run.hbar);
    Ok(ReferenceRun {
        self_error: l2_distance(&run.state, &fine)? / 3.0,
        state: fine,
        substeps,
        hbar: run.hbar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, Grid};
    use crate::oio::free_propagate;
    use crate::potential::DEFAULT_ENVELOPE;

    #[test]
    fn config_validation() {
        assert!(ReferenceConfig::new(255, 1.0).is_err());
        assert!(ReferenceConfig::new(256, 0.0).is_err());
        assert_eq!(ReferenceConfig::default().count(0.25), 1024);
    }

    #[test]
    fn unitary_substeps() {
        let g = Grid::default();
        let f = gaussian_packet(&g, 1.0, 1.0, 1.0, 1.0).unwrap();
        let model = PotentialModel::cosine(1.0, 1.0);
        let mut u = f.clone();
        for j in 0..16 {
            let s = j as f64 / 16.0;
            u = strang(&model, &u, s, s + 1.0 / 16.0, 1, 1.0);
            assert!((u.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_potential_is_free_flow() {
        let g = Grid::default();
        let f = gaussian_packet(&g, 0.5, -1.0, 1.0, 1.0).unwrap();
        let u = reference_propagate(&PotentialModel::zero(), &f, 0.0, 1.0, &ReferenceConfig::default()).unwrap();
        let v = free_propagate(&f, 1.0, 1.0).unwrap();
        assert!(l2_distance(&u, &v).unwrap() <= 1e-10);
    }

    #[test]
    fn time_order() {
        let g = Grid::new(12.0, 64).unwrap();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            reference_propagate(&PotentialModel::zero(), &f, 1.0, 1.0, &ReferenceConfig::default()),
            Err(Error::TimeOrder { .. })
        ));
    }

    #[test]
    fn time_dependent_refinement_agrees() {
        let g = Grid::default();
        let f = gaussian_packet(&g, 0.0, 0.5, 1.0, 1.0).unwrap();
        let model = PotentialModel::time_modulated(PotentialModel::cosine(1.0, 1.0), DEFAULT_ENVELOPE.to_vec()).unwrap();
        let run = reference_with_estimate(&model, &f, 0.0, 1.0, &ReferenceConfig::default()).unwrap();
        assert!(run.self_error * 3.0 <= 1e-8, "{}", run.self_error);
    }
}
