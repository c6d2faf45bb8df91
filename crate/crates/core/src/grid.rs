//! Periodic spatial lattice, sampled wavefunctions, norms and log-log order fits.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform periodic lattice on `[-half_width, half_width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    half_width: f64,
    points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::config(format!(
                "grid half_width must be positive and finite, got {half_width}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::config(format!(
                "grid points must be a power of two >= 8, got {points}"
            )));
        }
        Ok(Grid {
            half_width,
            points,
            spacing: 2.0 * half_width / points as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Position of node `m`.
    #[inline]
    pub fn x(&self, m: usize) -> f64 {
        -self.half_width + m as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |m| self.x(m))
    }

    /// Frequencies (cycles per unit length) in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let m = self.points as i64;
        let df = 1.0 / (self.points as f64 * self.spacing);
        (0..m)
            .map(|k| if k < m / 2 { k } else { k - m } as f64 * df)
            .collect()
    }

    /// Nyquist frequency in cycles per unit length.
    pub fn nyquist(&self) -> f64 {
        0.5 / self.spacing
    }

    /// Index of the node nearest to `x`, if `x` lies inside the domain.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let r = ((x + self.half_width) / self.spacing).round();
        (r >= 0.0 && (r as usize) < self.points).then_some(r as usize)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "grid mismatch: ({}, {}) vs ({}, {})",
                self.half_width, self.points, other.half_width, other.points
            )))
        }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(12.0, 1024).expect("default grid is valid")
    }
}

/// Non-fatal resolution diagnostics attached to computed states.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Mass of the state (or packet) outside the trusted region.
    SupportMass { mass: f64, radius: f64 },
    /// Fresnel width sqrt(2*pi*hbar*dt) below three grid spacings.
    ChirpUnresolved { fresnel_width: f64, spacing: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    values: Vec<Complex64>,
    pub warnings: Vec<Warning>,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::shape("wavefunction samples must be finite"));
        }
        Ok(WaveFunction {
            grid,
            values,
            warnings: Vec::new(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        WaveFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            warnings: Vec::new(),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        WaveFunction {
            values: grid.nodes().map(f).collect(),
            grid,
            warnings: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `sqrt(h * sum |f_m|^2)`.
    pub fn norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Mass `h * sum |f_m|^2` over nodes with `|x| > radius`.
    pub fn mass_outside(&self, radius: f64) -> f64 {
        let h = self.grid.spacing();
        self.grid
            .nodes()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() > radius)
            .map(|(_, v)| h * v.norm_sqr())
            .sum()
    }

    pub fn scaled(&self, c: Complex64) -> WaveFunction {
        WaveFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// `a*self + b*other`.
    pub fn combine(&self, a: Complex64, other: &WaveFunction, b: Complex64) -> Result<WaveFunction> {
        self.grid.check_same(&other.grid)?;
        Ok(WaveFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
            warnings: Vec::new(),
        })
    }

    pub(crate) fn with_values(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        WaveFunction {
            grid,
            values,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn push_warning(&mut self, w: Warning) {
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }
}

/// Unit-norm Gaussian packet `exp(-(x-c)^2/(2 w^2)) exp(i p x / hbar)`.
///
/// A [`Warning::SupportMass`] is attached when the continuous packet carries
/// more than `1e-12` of its mass outside the domain.
pub fn gaussian_packet(
    grid: &Grid,
    center: f64,
    momentum: f64,
    width: f64,
    hbar: f64,
) -> Result<WaveFunction> {
    if !(width > 0.0) {
        return Err(Error::config(format!("packet width must be positive, got {width}")));
    }
    if !(hbar > 0.0) {
        return Err(Error::config(format!("hbar must be positive, got {hbar}")));
    }
    let mut f = WaveFunction::from_fn(*grid, |x| {
        let d = (x - center) / width;
        Complex64::from_polar((-0.5 * d * d).exp(), momentum * x / hbar)
    });
    let n = f.norm();
    if !(n > 0.0) {
        return Err(Error::config("packet has no mass on the grid"));
    }
    for v in f.values.iter_mut() {
        *v /= n;
    }
    // |f|^2 is a normal density with standard deviation w/sqrt(2).
    let l = grid.half_width();
    let outside = 0.5 * libm::erfc((l - center) / width) + 0.5 * libm::erfc((l + center) / width);
    if outside > 1e-12 {
        f.push_warning(Warning::SupportMass {
            mass: outside,
            radius: l,
        });
    }
    Ok(f)
}

/// Random unit-norm state: a trigonometric polynomial with frequencies up to
/// `max_frequency` (cycles per unit) under a Gaussian envelope of the given
/// width centred at the origin. Deterministic in `seed`.
pub fn random_band_limited(
    grid: &Grid,
    seed: u64,
    max_frequency: f64,
    envelope_width: f64,
) -> Result<WaveFunction> {
    if !(envelope_width > 0.0) || !(max_frequency >= 0.0) {
        return Err(Error::config("random state needs positive envelope width and nonnegative band"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = 8;
    let modes: Vec<(f64, Complex64)> = (0..terms)
        .map(|_| {
            let xi = rng.random_range(-max_frequency..=max_frequency);
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (xi, c)
        })
        .collect();
    let center = rng.random_range(-1.0..1.0);
    let mut f = WaveFunction::from_fn(*grid, |x| {
        let d = (x - center) / envelope_width;
        let env = (-0.5 * d * d).exp();
        let s: Complex64 = modes
            .iter()
            .map(|(xi, c)| c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * xi * x))
            .sum();
        s * env
    });
    let n = f.norm();
    if !(n > 0.0) {
        return Err(Error::config("random state vanished on the grid"));
    }
    for v in f.values.iter_mut() {
        *v /= n;
    }
    Ok(f)
}

/// `sqrt(h * sum |f_m - g_m|^2)`.
pub fn l2_distance(f: &WaveFunction, g: &WaveFunction) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    let h = f.grid.spacing();
    Ok((h * f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>())
    .sqrt())
}

/// Least-squares slope of `log(errors)` against `log(meshes)`.
pub fn fit_order(meshes: &[f64], errors: &[f64]) -> Result<f64> {
    if meshes.len() != errors.len() {
        return Err(Error::shape(format!(
            "{} meshes but {} errors",
            meshes.len(),
            errors.len()
        )));
    }
    if meshes.len() < 3 {
        return Err(Error::config("an order fit needs at least three points"));
    }
    if meshes.windows(2).any(|w| !(w[1] < w[0])) || meshes.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::config("meshes must be positive and strictly decreasing"));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::DegenerateFit(format!(
            "error value {e} is not strictly positive; raise the resolution"
        )));
    }
    let xs: Vec<f64> = meshes.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Mesh sizes, errors and the fitted log-log slope of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub labels: Vec<String>,
    pub meshes: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_order: f64,
    pub target_order: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    /// Fits the slope and applies the one-sided acceptance rule
    /// `fitted_order >= target_order - tolerance`.
    pub fn from_series(
        labels: Vec<String>,
        meshes: Vec<f64>,
        errors: Vec<f64>,
        target_order: f64,
        tolerance: f64,
    ) -> Result<Self> {
        let fitted_order = fit_order(&meshes, &errors)?;
        Ok(ConvergenceReport {
            labels,
            meshes,
            errors,
            fitted_order,
            target_order,
            tolerance,
            passed: fitted_order >= target_order - tolerance,
        })
    }
}
