//! Thin wrappers over rustfft with cached plans.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and normalized inverse transforms of one length.
#[derive(Clone)]
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl Spectral {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    /// Unnormalized `X_k = sum_n x_n e^{-2 pi i kn/N}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// `x_n = (1/N) sum_k X_k e^{2 pi i kn/N}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Multiplies the spectrum of `data` by `multiplier` (FFT order).
    pub fn apply_multiplier(&self, data: &mut [Complex64], multiplier: &[Complex64]) {
        self.forward(data);
        for (v, m) in data.iter_mut().zip(multiplier) {
            *v *= m;
        }
        self.inverse(data);
    }
}

/// Free-flow Fourier multiplier `exp(-i 2 pi^2 hbar dt xi^2)` on `freqs`.
pub(crate) fn free_multiplier(freqs: &[f64], dt: f64, hbar: f64) -> Vec<Complex64> {
    let c = -2.0 * std::f64::consts::PI * std::f64::consts::PI * hbar * dt;
    freqs
        .iter()
        .map(|xi| Complex64::from_polar(1.0, c * xi * xi))
        .collect()
}
