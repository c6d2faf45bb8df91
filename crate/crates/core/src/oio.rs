//! Free propagation and the short-time approximate propagator `E^(N)(t, s)`.
//!
//! `E^(N)` has kernel `(2 pi i (t-s) hbar)^{-1/2} exp(i S^(N)/hbar)`, an
//! oscillatory integral operator whose phase is the free action and whose
//! amplitude is `exp(i R^(N)/hbar)`. On the grid the free factor is the
//! band-limited free propagator (the circulant whose symbol is
//! `exp(-i 2 pi^2 hbar dt xi^2)`); sampling the continuous chirp pointwise
//! aliases once `|x - y|` exceeds `pi hbar dt / h`.

use num_complex::Complex64;

use crate::action::{ActionExpansion, TwoPointField};
use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction, Warning};
use crate::spectral::{free_multiplier, Spectral};

/// Default `T` in the window `0 < t - s <= T hbar`.
pub const DEFAULT_WINDOW: f64 = 1.0;

/// Mass threshold outside `|x| <= L/2` above which a support warning is set.
const SUPPORT_MASS: f64 = 1e-12;

/// Exact free evolution of the periodic band-limited interpolant of `f`.
pub fn free_propagate(f: &WaveFunction, dt: f64, hbar: f64) -> Result<WaveFunction> {
    if !(dt > 0.0) {
        return Err(Error::TimeOrder { s: 0.0, t: dt });
    }
    if !(hbar > 0.0) {
        return Err(Error::config(format!("hbar must be positive, got {hbar}")));
    }
    let grid = *f.grid();
    let mut v = f.values().to_vec();
    Spectral::new(grid.len()).apply_multiplier(&mut v, &free_multiplier(&grid.frequencies(), dt, hbar));
    let mut out = WaveFunction::new(grid, v)?;
    out.warnings = f.warnings.clone();
    Ok(out)
}

/// First row of the discrete free propagator: `(K f)_i = sum_j c[(i-j) mod M] f_j`.
pub(crate) fn free_kernel_row(grid: &Grid, dt: f64, hbar: f64) -> Vec<Complex64> {
    let mut c = free_multiplier(&grid.frequencies(), dt, hbar);
    Spectral::new(grid.len()).inverse(&mut c);
    c
}

fn check_window(s: f64, t: f64, hbar: f64, window: f64, slice: Option<usize>) -> Result<f64> {
    if !(t > s) {
        return Err(Error::TimeOrder { s, t });
    }
    let dt = t - s;
    let limit = window * hbar;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Window { dt, limit, slice });
    }
    Ok(dt)
}

/// Resolution diagnostics for a step of length `dt` applied to `f`.
pub fn step_warnings(grid: &Grid, dt: f64, hbar: f64, f: &WaveFunction) -> Vec<Warning> {
    let mut w = Vec::new();
    let fresnel = (2.0 * std::f64::consts::PI * hbar * dt).sqrt();
    if fresnel < 3.0 * grid.spacing() {
        w.push(Warning::ChirpUnresolved {
            fresnel_width: fresnel,
            spacing: grid.spacing(),
        });
    }
    let radius = 0.5 * grid.half_width();
    let mass = f.mass_outside(radius);
    if mass > SUPPORT_MASS {
        w.push(Warning::SupportMass { mass, radius });
    }
    w
}

/// Assembled kernel of `E^(N)(t, s)` including the quadrature weight.
#[derive(Debug, Clone)]
pub struct PropagatorStep {
    pub s: f64,
    pub t: f64,
    pub hbar: f64,
    kernel: TwoPointField,
}

impl PropagatorStep {
    pub fn new(expansion: &ActionExpansion, t: f64, s: f64, window: f64) -> Result<Self> {
        Self::build(expansion, t, s, window, None)
    }

    fn build(expansion: &ActionExpansion, t: f64, s: f64, window: f64, slice: Option<usize>) -> Result<Self> {
        let hbar = expansion.hbar();
        let dt = check_window(s, t, hbar, window, slice)?;
        if expansion.model().is_time_dependent() && (expansion.s() - s).abs() > 1e-14 * (1.0 + s.abs()) {
            return Err(Error::config(format!(
                "expansion built at s = {} used for a step from s = {s}",
                expansion.s()
            )));
        }
        let grid = *expansion.grid();
        let m = grid.len();
        let row = free_kernel_row(&grid, dt, hbar);
        let r = expansion.remainder_table(dt)?;
        let i_over_hbar = Complex64::new(0.0, 1.0 / hbar);
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for (j, rv) in r.row(i).iter().enumerate() {
                values.push(row[(i + m - j) % m] * (i_over_hbar * rv).exp());
            }
        }
        Ok(PropagatorStep {
            s,
            t,
            hbar,
            kernel: TwoPointField::new(grid, values)?,
        })
    }

    pub fn kernel(&self) -> &TwoPointField {
        &self.kernel
    }

    pub fn apply(&self, f: &WaveFunction) -> Result<WaveFunction> {
        let grid = *self.kernel.grid();
        f.grid().check_same(&grid)?;
        let fv = f.values();
        let values = (0..grid.len())
            .map(|i| {
                self.kernel
                    .row(i)
                    .iter()
                    .zip(fv)
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, v)| acc + k * v)
            })
            .collect();
        let mut out = WaveFunction::with_values(grid, values);
        for w in f.warnings.iter().cloned().chain(step_warnings(&grid, self.t - self.s, self.hbar, f)) {
            out.push_warning(w);
        }
        Ok(out)
    }
}

/// `E^(N)(t, s) f` with the default window.
pub fn apply_short_time_propagator(
    expansion: &ActionExpansion,
    f: &WaveFunction,
    t: f64,
    s: f64,
) -> Result<WaveFunction> {
    apply_short_time_propagator_with_window(expansion, f, t, s, DEFAULT_WINDOW)
}

pub fn apply_short_time_propagator_with_window(
    expansion: &ActionExpansion,
    f: &WaveFunction,
    t: f64,
    s: f64,
    window: f64,
) -> Result<WaveFunction> {
    f.grid().check_same(expansion.grid())?;
    PropagatorStep::new(expansion, t, s, window)?.apply(f)
}

pub(crate) fn step_for_slice(
    expansion: &ActionExpansion,
    t: f64,
    s: f64,
    window: f64,
    slice: usize,
) -> Result<PropagatorStep> {
    PropagatorStep::build(expansion, t, s, window, Some(slice))
}

pub(crate) fn validate_slice(s: f64, t: f64, hbar: f64, window: f64, slice: usize) -> Result<()> {
    check_window(s, t, hbar, window, Some(slice)).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, l2_distance, random_band_limited};
    use crate::potential::PotentialModel;

    #[test]
    fn free_identity_limit_and_unitarity() {
        let g = Grid::default();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.0, 1.0).unwrap();
        let u = free_propagate(&f, 1e-6, 1.0).unwrap();
        assert!(l2_distance(&u, &f).unwrap() <= 1e-4);
        let u = free_propagate(&f, 0.7, 1.0).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(free_propagate(&f, 0.0, 1.0), Err(Error::TimeOrder { .. })));
    }

    #[test]
    fn free_gaussian_closed_form() {
        // exp(-x^2/2) evolves to (1 + i t)^{-1/2} exp(-x^2 / (2 (1 + i t))).
        let g = Grid::default();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.0, 1.0).unwrap();
        let c = f.values()[g.len() / 2].re;
        let u = free_propagate(&f, 1.0, 1.0).unwrap();
        let a = Complex64::new(1.0, 1.0);
        let want = WaveFunction::from_fn(g, |x| c * (-(x * x) / (2.0 * a)).exp() / a.sqrt());
        assert!(l2_distance(&u, &want).unwrap() <= 1e-8);
        // |u|^2 spreads with variance (1 + t^2)/2.
        let h = g.spacing();
        let var: f64 = g.nodes().zip(u.values()).map(|(x, v)| h * x * x * v.norm_sqr()).sum();
        assert!((var - 1.0).abs() < 1e-8);
    }

    #[test]
    fn free_group_property() {
        let g = Grid::default();
        let f = random_band_limited(&g, 1, 1.5, 1.0).unwrap();
        let half = free_propagate(&free_propagate(&f, 0.3, 1.0).unwrap(), 0.3, 1.0).unwrap();
        let full = free_propagate(&f, 0.6, 1.0).unwrap();
        assert!(l2_distance(&half, &full).unwrap() <= 1e-10);
    }

    #[test]
    fn dense_path_matches_spectral_for_zero_potential() {
        let g = Grid::new(12.0, 256).unwrap();
        let exp = ActionExpansion::new(PotentialModel::zero(), 2, 0.0, 1.0, g).unwrap();
        for (c, p) in [(0.0, 0.0), (1.0, 2.0), (-1.5, -1.0)] {
            let f = gaussian_packet(&g, c, p, 1.0, 1.0).unwrap();
            let dense = apply_short_time_propagator(&exp, &f, 0.25, 0.0).unwrap();
            let spec = free_propagate(&f, 0.25, 1.0).unwrap();
            assert!(l2_distance(&dense, &spec).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn window_and_time_order() {
        let g = Grid::new(12.0, 64).unwrap();
        let exp = ActionExpansion::new(PotentialModel::cosine(1.0, 1.0), 1, 0.0, 1.0, g).unwrap();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            apply_short_time_propagator(&exp, &f, 1.5, 0.0),
            Err(Error::Window { slice: None, .. })
        ));
        assert!(matches!(
            apply_short_time_propagator(&exp, &f, 0.0, 0.0),
            Err(Error::TimeOrder { .. })
        ));
        assert!(apply_short_time_propagator_with_window(&exp, &f, 1.5, 0.0, 2.0).is_ok());
    }

    #[test]
    fn unresolved_chirp_is_flagged() {
        let g = Grid::default();
        let exp = ActionExpansion::new(PotentialModel::cosine(1.0, 1.0), 1, 0.0, 1.0, g).unwrap();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.0, 1.0).unwrap();
        let u = apply_short_time_propagator(&exp, &f, 1e-4, 0.0).unwrap();
        assert!(u.warnings.iter().any(|w| matches!(w, Warning::ChirpUnresolved { .. })));
        let u = apply_short_time_propagator(&exp, &f, 0.1, 0.0).unwrap();
        assert!(u.warnings.is_empty());
    }
}
