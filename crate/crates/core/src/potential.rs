//! Potential models `V(t, x) = e(t) * (P(x) + sum_j a_j cos(b_j x))` with
//! closed-form mixed derivatives.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::quadrature::{beta_exp_moment, GaussLegendre};
use crate::timefreq::{modulation_norm, stft, PhaseSpaceLattice};

/// Default derivative budget `2 N_max` (so `N <= 4`).
pub const DEFAULT_BUDGET: usize = 8;

/// Default time envelope `1 + t^2/2` for modulated potentials.
pub const DEFAULT_ENVELOPE: [f64; 3] = [1.0, 0.0, 0.5];

/// Model description, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Linear { a: f64 },
    Harmonic { kappa: f64 },
    Cosine { a: f64, b: f64 },
    FourierSeries { amplitudes: Vec<f64>, frequencies: Vec<f64> },
    TimeModulated { base: Box<PotentialKind>, envelope: Vec<f64> },
}

/// One cosine mode `a cos(b x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialModel {
    kind: PotentialKind,
    budget: usize,
    /// Coefficients of `e(t)` in increasing degree.
    envelope: Vec<f64>,
    /// Coefficients of `P(x)` in increasing degree.
    poly: Vec<f64>,
    modes: Vec<Mode>,
}

impl PotentialModel {
    fn build(kind: PotentialKind, poly: Vec<f64>, modes: Vec<Mode>) -> Self {
        PotentialModel {
            kind,
            budget: DEFAULT_BUDGET,
            envelope: vec![1.0],
            poly: trim(poly),
            modes,
        }
    }

    pub fn zero() -> Self {
        Self::build(PotentialKind::Zero, vec![], vec![])
    }

    /// `V = a x`.
    pub fn linear(a: f64) -> Self {
        Self::build(PotentialKind::Linear { a }, vec![0.0, a], vec![])
    }

    /// `V = kappa x^2 / 2`.
    pub fn harmonic(kappa: f64) -> Self {
        Self::build(PotentialKind::Harmonic { kappa }, vec![0.0, 0.0, 0.5 * kappa], vec![])
    }

    /// `V = a cos(b x)`.
    pub fn cosine(a: f64, b: f64) -> Self {
        Self::build(PotentialKind::Cosine { a, b }, vec![], vec![Mode { a, b }])
    }

    /// `V = sum_j a_j cos(b_j x)`.
    pub fn fourier_series(amplitudes: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != frequencies.len() {
            return Err(Error::shape(format!(
                "{} amplitudes but {} frequencies",
                amplitudes.len(),
                frequencies.len()
            )));
        }
        if amplitudes.is_empty() {
            return Err(Error::config("fourier series needs at least one term"));
        }
        if amplitudes.iter().chain(&frequencies).any(|v| !v.is_finite()) {
            return Err(Error::config("fourier series coefficients must be finite"));
        }
        let modes = amplitudes
            .iter()
            .zip(&frequencies)
            .map(|(&a, &b)| Mode { a, b })
            .collect();
        Ok(Self::build(
            PotentialKind::FourierSeries {
                amplitudes,
                frequencies,
            },
            vec![],
            modes,
        ))
    }

    /// `V(t, x) = e(t) * base(x)` with `e` a polynomial (coefficients in
    /// increasing degree).
    pub fn time_modulated(base: PotentialModel, envelope: Vec<f64>) -> Result<Self> {
        if envelope.is_empty() || envelope.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("envelope needs finite coefficients"));
        }
        let mut env = vec![0.0; base.envelope.len() + envelope.len() - 1];
        for (i, a) in base.envelope.iter().enumerate() {
            for (j, b) in envelope.iter().enumerate() {
                env[i + j] += a * b;
            }
        }
        Ok(PotentialModel {
            kind: PotentialKind::TimeModulated {
                base: Box::new(base.kind),
                envelope,
            },
            budget: base.budget,
            envelope: trim(env),
            poly: base.poly,
            modes: base.modes,
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Largest `2k + alpha` for which derivatives are provided.
    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn polynomial(&self) -> &[f64] {
        &self.poly
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn is_time_dependent(&self) -> bool {
        self.envelope.len() > 1
    }

    pub fn is_zero(&self) -> bool {
        self.envelope.iter().all(|&c| c == 0.0)
            || (self.poly.is_empty() && self.modes.iter().all(|m| m.a == 0.0))
    }

    /// True when `V(t, -x) = V(t, x)`.
    pub fn is_even(&self) -> bool {
        self.poly.iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }

    pub fn is_polynomial(&self) -> bool {
        self.modes.iter().all(|m| m.a == 0.0 || m.b == 0.0)
    }

    /// Largest `|b_j|` (angular frequency) among the modes.
    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.b.abs()).fold(0.0, f64::max)
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.envelope_derivative(0, t) * self.spatial_derivative(0, x)
    }

    /// `d_t^k d_x^alpha V(t, x)`, refusing orders outside the budget.
    pub fn derivative(&self, k: usize, alpha: usize, t: f64, x: f64) -> Result<f64> {
        self.check_budget(k, alpha)?;
        Ok(self.envelope_derivative(k, t) * self.spatial_derivative(alpha, x))
    }

    pub(crate) fn check_budget(&self, k: usize, alpha: usize) -> Result<()> {
        let requested = 2 * k + alpha;
        if requested > self.budget {
            return Err(Error::DerivativeBudget {
                k,
                alpha,
                requested,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// `e^{(k)}(t)`.
    pub fn envelope_derivative(&self, k: usize, t: f64) -> f64 {
        poly_derivative(&self.envelope, k, t)
    }

    /// `d_x^alpha (P(x) + sum_j a_j cos(b_j x))`.
    pub fn spatial_derivative(&self, alpha: usize, x: f64) -> f64 {
        let mut v = poly_derivative(&self.poly, alpha, x);
        for m in &self.modes {
            v += m.a * m.b.powi(alpha as i32) * (m.b * x + alpha as f64 * std::f64::consts::FRAC_PI_2).cos();
        }
        v
    }

    /// `int_0^1 p^m (1-p)^i d_t^k d_x^alpha V(s, y + p (x - y)) dp`, exact
    /// for every model (Gauss-Legendre on the polynomial part, closed form on
    /// the modes).
    pub fn ray_moment(&self, k: usize, alpha: usize, m: usize, i: usize, s: f64, x: f64, y: f64) -> f64 {
        let e = self.envelope_derivative(k, s);
        if e == 0.0 {
            return 0.0;
        }
        let u = x - y;
        let mut total = 0.0;
        if self.poly.len() > alpha {
            let q = ray_rule();
            total += q.integrate(|p| {
                p.powi(m as i32) * (1.0 - p).powi(i as i32) * poly_derivative(&self.poly, alpha, y + p * u)
            });
        }
        for mode in &self.modes {
            total += mode_moment(*mode, alpha, m, i, y, u);
        }
        e * total
    }

    /// The polynomial part alone, same envelope and budget.
    pub(crate) fn clone_without_modes(&self) -> PotentialModel {
        PotentialModel {
            modes: Vec::new(),
            ..self.clone()
        }
    }

    /// Samples of `d_t^k d_x^alpha V(t, .)` on `grid`.
    pub fn sample(&self, k: usize, alpha: usize, t: f64, grid: &Grid) -> Result<WaveFunction> {
        self.check_budget(k, alpha)?;
        let e = self.envelope_derivative(k, t);
        Ok(WaveFunction::from_fn(*grid, |x| {
            Complex64::new(e * self.spatial_derivative(alpha, x), 0.0)
        }))
    }
}

/// `int_0^1 p^m (1-p)^i d^alpha[a cos(b z)](y + p u) dp`.
pub(crate) fn mode_moment(mode: Mode, alpha: usize, m: usize, i: usize, y: f64, u: f64) -> f64 {
    if mode.a == 0.0 {
        return 0.0;
    }
    let c = mode_coefficient(mode, alpha) * Complex64::from_polar(1.0, mode.b * y);
    (c * beta_exp_moment(m, i, mode.b * u)).re
}

/// `a (ib)^alpha`, so that `d^alpha a cos(bz) = Re[a (ib)^alpha e^{ibz}]`.
pub(crate) fn mode_coefficient(mode: Mode, alpha: usize) -> Complex64 {
    mode.a * Complex64::new(0.0, mode.b).powu(alpha as u32)
}

fn ray_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

/// `d^k/dx^k` of the polynomial with coefficients `c`, at `x`.
pub(crate) fn poly_derivative(c: &[f64], k: usize, x: f64) -> f64 {
    if c.len() <= k {
        return 0.0;
    }
    let mut acc = 0.0;
    for (n, &cn) in c.iter().enumerate().skip(k).rev() {
        let falling = ((n - k + 1)..=n).fold(1.0, |a, j| a * j as f64);
        acc = acc * x + cn * falling;
    }
    acc
}

/// `a_j = j^{-(2N+2)}`, `b_j = j` for `j = 1..=J`, with budget exactly `2N`.
pub fn make_low_regularity_potential(order: usize, terms: usize) -> Result<PotentialModel> {
    if order == 0 || terms == 0 {
        return Err(Error::config("low-regularity potential needs N >= 1 and J >= 1"));
    }
    let p = -(2.0 * order as f64 + 2.0);
    let amplitudes = (1..=terms).map(|j| (j as f64).powf(p)).collect();
    let frequencies = (1..=terms).map(|j| j as f64).collect();
    Ok(PotentialModel::fourier_series(amplitudes, frequencies)?.with_budget(2 * order))
}

/// Discrete Sjöstrand-norm entry for one derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityEntry {
    pub k: usize,
    pub alpha: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub order: usize,
    pub entries: Vec<RegularityEntry>,
}

impl RegularityReport {
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.norm.is_finite())
    }
}

/// For every `(k, alpha)` with `2k + alpha <= 2N`, the discrete `M^{inf,1}`
/// norm of `d_t^k d_x^alpha V(0, .)` sampled on the lattice grid. A witness on
/// a periodic truncation, not a proof of membership.
pub fn verify_regularity(
    model: &PotentialModel,
    order: usize,
    lattice: &PhaseSpaceLattice,
) -> Result<RegularityReport> {
    model.check_budget(order, 0)?;
    let mut entries = Vec::new();
    for k in 0..=order {
        for alpha in 0..=(2 * order - 2 * k) {
            let f = model.sample(k, alpha, 0.0, lattice.grid())?;
            let data = stft(&f, lattice)?;
            entries.push(RegularityEntry {
                k,
                alpha,
                norm: modulation_norm(&data, f64::INFINITY, 1.0)?,
            });
        }
    }
    Ok(RegularityReport { order, entries })
}
