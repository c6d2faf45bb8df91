//! Discrete short-time Fourier transform, mixed modulation norms, Wigner and
//! ambiguity transforms, dilations and the dilation constant.
//!
//! Conventions: `V_g f(x, w) = int f(y) conj(g(y - x)) e^{-2 pi i y w} dy`.
//! Frequencies are in cycles per unit length. The frequency lattice has
//! `M_w = M` points spaced `1 / (2 M h)`, so it covers `[-Xi, Xi)` with `Xi`
//! half the grid Nyquist frequency.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::action::{ActionExpansion, TwoPointField};
use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::spectral::Spectral;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fixed bound for the frozen-slice `(inf, 1)` norm of `e^{i R^(N) / hbar}`
/// over `t - s` in `(0, 1]`. The norm tends to `2^{1/4}` (the constant 1)
/// as `t - s -> 0`; measured values on the standard potentials stay below 1.45.
pub const FROZEN_NORM_CAP: f64 = 2.0;

/// L²-normalized Gaussian window `2^{1/4} a^{-1/2} exp(-pi x^2 / a^2)`.
pub fn gaussian_window(grid: &Grid, width: f64) -> Result<WaveFunction> {
    if !(width > 0.0) {
        return Err(Error::config(format!("window width must be positive, got {width}")));
    }
    let c = 2f64.powf(0.25) / width.sqrt();
    Ok(WaveFunction::from_fn(*grid, |x| {
        Complex64::new(c * (-std::f64::consts::PI * x * x / (width * width)).exp(), 0.0)
    }))
}

/// Position nodes (the grid), frequency nodes and an analysis window.
#[derive(Clone)]
pub struct PhaseSpaceLattice {
    grid: Grid,
    window: WaveFunction,
    freq_points: usize,
    freq_spacing: f64,
    fft: Spectral,
}

impl fmt::Debug for PhaseSpaceLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseSpaceLattice")
            .field("grid", &self.grid)
            .field("freq_points", &self.freq_points)
            .field("freq_spacing", &self.freq_spacing)
            .finish()
    }
}

impl PhaseSpaceLattice {
    /// Lattice with the unit-width Gaussian window.
    pub fn new(grid: Grid) -> Result<Self> {
        Self::with_window(gaussian_window(&grid, 1.0)?)
    }

    /// Lattice with a caller-provided window (sampled on the grid, centred at
    /// the origin, unit L² norm).
    pub fn with_window(window: WaveFunction) -> Result<Self> {
        let n = window.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("window must have unit norm, got {n}")));
        }
        let grid = *window.grid();
        let m = grid.len();
        Ok(PhaseSpaceLattice {
            grid,
            window,
            freq_points: m,
            freq_spacing: 1.0 / (2.0 * m as f64 * grid.spacing()),
            fft: Spectral::new(2 * m),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn window(&self) -> &WaveFunction {
        &self.window
    }

    pub fn freq_points(&self) -> usize {
        self.freq_points
    }

    pub fn freq_spacing(&self) -> f64 {
        self.freq_spacing
    }

    /// Frequency of node `k`.
    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 - (self.freq_points / 2) as f64) * self.freq_spacing
    }

    /// Half-width `Xi` of the frequency range.
    pub fn xi(&self) -> f64 {
        (self.freq_points / 2) as f64 * self.freq_spacing
    }

    /// `h * sum_n P_n e^{-2 pi i y_n w_k}` for every frequency node.
    fn transform_row(&self, products: &[Complex64], out: &mut [Complex64], buf: &mut Vec<Complex64>) {
        let m = self.grid.len();
        let h = self.grid.spacing();
        let l = self.grid.half_width();
        buf.clear();
        buf.extend_from_slice(products);
        buf.resize(2 * m, Complex64::new(0.0, 0.0));
        self.fft.forward(buf);
        let half = self.freq_points / 2;
        for (k, o) in out.iter_mut().enumerate() {
            let q = (k + 2 * m - half) % (2 * m);
            *o = buf[q] * Complex64::from_polar(h, TWO_PI * l * self.omega(k));
        }
    }
}

/// Samples on the `M x M_w` phase-space lattice, row-major in position.
#[derive(Debug, Clone)]
pub struct STFTData {
    pub lattice: PhaseSpaceLattice,
    pub values: Vec<Complex64>,
}

impl STFTData {
    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.values[m * self.lattice.freq_points + k]
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        let k = self.lattice.freq_points;
        &self.values[m * k..(m + 1) * k]
    }
}

/// `V_g f` on the lattice, with `g` the lattice window and `f` extended by
/// zero outside the grid domain.
pub fn stft(f: &WaveFunction, lattice: &PhaseSpaceLattice) -> Result<STFTData> {
    stft_with(f, lattice.window.values(), lattice)
}

fn stft_with(f: &WaveFunction, window: &[Complex64], lattice: &PhaseSpaceLattice) -> Result<STFTData> {
    f.grid().check_same(&lattice.grid)?;
    let m = lattice.grid.len();
    let kk = lattice.freq_points;
    let fv = f.values();
    let mut values = vec![Complex64::new(0.0, 0.0); m * kk];
    let mut products = vec![Complex64::new(0.0, 0.0); m];
    let mut buf = Vec::with_capacity(2 * m);
    for (xm, row) in values.chunks_mut(kk).enumerate() {
        // g(y_n - x_m) is the window sample at index n - m + M/2.
        for (n, p) in products.iter_mut().enumerate() {
            *p = fv[n] * window[(n + m + m / 2 - xm) % m].conj();
        }
        lattice.transform_row(&products, row, &mut buf);
    }
    Ok(STFTData {
        lattice: lattice.clone(),
        values,
    })
}

/// Mixed norm `(int (int |V|^p dx)^{q/p} dw)^{1/q}` with Riemann weights.
/// `p`, `q` in `[1, inf]`.
pub fn modulation_norm(data: &STFTData, p: f64, q: f64) -> Result<f64> {
    let grid = data.lattice.grid;
    modulation_norm_within(data, p, q, grid.half_width() + grid.spacing())
}

/// As [`modulation_norm`], restricting positions to `|x| <= radius`.
pub fn modulation_norm_within(data: &STFTData, p: f64, q: f64, radius: f64) -> Result<f64> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::config(format!("mixed-norm exponents must be >= 1, got ({p}, {q})")));
    }
    let lat = &data.lattice;
    let h = lat.grid.spacing();
    let rows: Vec<usize> = (0..lat.grid.len())
        .filter(|&m| lat.grid.x(m).abs() <= radius)
        .collect();
    let mut outer = 0.0;
    let mut outer_max: f64 = 0.0;
    for k in 0..lat.freq_points {
        let inner = if p.is_infinite() {
            rows.iter().map(|&m| data.get(m, k).norm()).fold(0.0, f64::max)
        } else {
            (h * rows.iter().map(|&m| data.get(m, k).norm().powf(p)).sum::<f64>()).powf(1.0 / p)
        };
        if q.is_infinite() {
            outer_max = outer_max.max(inner);
        } else {
            outer += lat.freq_spacing * inner.powf(q);
        }
    }
    Ok(if q.is_infinite() { outer_max } else { outer.powf(1.0 / q) })
}

/// Band-limited shift `f(x + h/2)` on the grid.
fn half_shift(f: &[Complex64], grid: &Grid) -> Vec<Complex64> {
    let m = grid.len();
    let fft = Spectral::new(m);
    let h = grid.spacing();
    let freqs = grid.frequencies();
    let mut mult: Vec<Complex64> = freqs
        .iter()
        .map(|xi| Complex64::from_polar(1.0, std::f64::consts::PI * xi * h))
        .collect();
    mult[m / 2] = Complex64::new((std::f64::consts::PI * freqs[m / 2].abs() * h).cos(), 0.0);
    let mut v = f.to_vec();
    fft.apply_multiplier(&mut v, &mult);
    v
}

/// Ambiguity `A(f,g)(x,w) = int e^{-2 pi i w y} f(y + x/2) conj(g(y - x/2)) dy`
/// by direct quadrature.
pub fn ambiguity(f: &WaveFunction, g: &WaveFunction, lattice: &PhaseSpaceLattice) -> Result<STFTData> {
    f.grid().check_same(&lattice.grid)?;
    g.grid().check_same(&lattice.grid)?;
    let grid = lattice.grid;
    let m = grid.len();
    let kk = lattice.freq_points;
    let (fv, gv) = (f.values(), g.values());
    let fh = half_shift(fv, &grid);
    let gh = half_shift(gv, &grid);
    let mut values = vec![Complex64::new(0.0, 0.0); m * kk];
    let mut products = vec![Complex64::new(0.0, 0.0); m];
    let mut buf = Vec::with_capacity(2 * m);
    for (xm, row) in values.chunks_mut(kk).enumerate() {
        let d = xm as i64 - (m / 2) as i64;
        let j = d.div_euclid(2);
        let idx = |n: usize, off: i64| (n as i64 + off).rem_euclid(m as i64) as usize;
        for (n, p) in products.iter_mut().enumerate() {
            *p = if d % 2 == 0 {
                fv[idx(n, j)] * gv[idx(n, -j)].conj()
            } else {
                fh[idx(n, j)] * gh[idx(n, -j - 1)].conj()
            };
        }
        lattice.transform_row(&products, row, &mut buf);
    }
    Ok(STFTData {
        lattice: lattice.clone(),
        values,
    })
}

/// Cross-Wigner `W(f,g)(x,w) = int e^{-2 pi i y w} f(x + y/2) conj(g(x - y/2)) dy`
/// by direct quadrature.
pub fn wigner(f: &WaveFunction, g: &WaveFunction, lattice: &PhaseSpaceLattice) -> Result<STFTData> {
    f.grid().check_same(&lattice.grid)?;
    g.grid().check_same(&lattice.grid)?;
    let m = lattice.grid.len();
    let h = lattice.grid.spacing();
    let kk = lattice.freq_points;
    let (fv, gv) = (f.values(), g.values());
    let fft = Spectral::new(m);
    let mut values = vec![Complex64::new(0.0, 0.0); m * kk];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (xm, row) in values.chunks_mut(kk).enumerate() {
        // Substituting y = 2v: 2 h sum_j e^{-4 pi i j h w} f[m+j] conj(g[m-j]).
        for (j, b) in buf.iter_mut().enumerate() {
            *b = fv[(xm + j) % m] * gv[(xm + m - j) % m].conj();
        }
        fft.forward(&mut buf);
        for (k, o) in row.iter_mut().enumerate() {
            let q = (k + m - kk / 2) % m;
            *o = buf[q] * (2.0 * h);
        }
    }
    Ok(STFTData {
        lattice: lattice.clone(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerAmbiguityReport {
    /// `max |A(f,g) - e^{pi i x w} V_g f|` over the lattice.
    pub ambiguity_residual: f64,
    /// `max |W(f,g) - 2 e^{4 pi i x w} V_{Ig} f(2x, 2w)|` over the lattice
    /// points whose doubled arguments stay on the lattice.
    pub wigner_residual: f64,
    pub wigner_points: usize,
}

/// Cross-checks the ambiguity and Wigner relations to the STFT, with each
/// side computed from its own definition. The window `g` is passed
/// explicitly; the lattice supplies the positions and frequencies.
pub fn wigner_ambiguity_check(
    f: &WaveFunction,
    g: &WaveFunction,
    lattice: &PhaseSpaceLattice,
) -> Result<WignerAmbiguityReport> {
    let m = lattice.grid.len();
    let kk = lattice.freq_points;
    if m < 16 || kk < 16 {
        return Err(Error::Lattice(format!(
            "lattice {m}x{kk} too coarse for doubled arguments"
        )));
    }
    f.grid().check_same(&lattice.grid)?;
    g.grid().check_same(&lattice.grid)?;
    let gv = g.values();
    let v = stft_with(f, gv, lattice)?;
    let ig: Vec<Complex64> = (0..m).map(|n| gv[(m - n) % m]).collect();
    let vi = stft_with(f, &ig, lattice)?;
    let a = ambiguity(f, g, lattice)?;
    let w = wigner(f, g, lattice)?;

    let mut amb_res: f64 = 0.0;
    for xm in 0..m {
        let x = lattice.grid.x(xm);
        for k in 0..kk {
            let phase = Complex64::from_polar(1.0, std::f64::consts::PI * x * lattice.omega(k));
            amb_res = amb_res.max((a.get(xm, k) - phase * v.get(xm, k)).norm());
        }
    }
    let mut wig_res: f64 = 0.0;
    let mut points = 0;
    for xm in m / 4..3 * m / 4 {
        let x = lattice.grid.x(xm);
        for k in kk / 4..3 * kk / 4 {
            let phase = Complex64::from_polar(2.0, 2.0 * TWO_PI * x * lattice.omega(k));
            let rhs = phase * vi.get(2 * xm - m / 2, 2 * k - kk / 2);
            wig_res = wig_res.max((w.get(xm, k) - rhs).norm());
            points += 1;
        }
    }
    Ok(WignerAmbiguityReport {
        ambiguity_residual: amb_res,
        wigner_residual: wig_res,
        wigner_points: points,
    })
}

/// `f(lambda x)`, times `|lambda|^{1/2}` when `normalized`, by trigonometric
/// interpolation. Samples whose argument leaves the domain are zero.
pub fn dilate(f: &WaveFunction, lambda: f64, normalized: bool) -> Result<WaveFunction> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::config(format!("dilation factor must be nonzero and finite, got {lambda}")));
    }
    let grid = *f.grid();
    let l = grid.half_width();
    let radius = lambda.abs().min(1.0) * l * 7.0 / 8.0;
    let total = f.norm().powi(2);
    let outside = f.mass_outside(radius);
    if outside > 1e-10 * total.max(f64::MIN_POSITIVE) {
        return Err(Error::Support(format!(
            "mass {outside:.3e} outside |x| <= {radius:.3} would leave the domain under dilation by {lambda}"
        )));
    }
    let m = grid.len();
    let mut spec = f.values().to_vec();
    Spectral::new(m).forward(&mut spec);
    let freqs = grid.frequencies();
    let x0 = grid.x(0);
    let scale = if normalized { lambda.abs().sqrt() } else { 1.0 } / m as f64;
    let values = grid
        .nodes()
        .map(|x| {
            let z = lambda * x;
            if z.abs() >= l {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, (&c, &xi)) in spec.iter().zip(&freqs).enumerate() {
                if q == m / 2 {
                    acc += c * (TWO_PI * xi.abs() * (z - x0)).cos();
                } else {
                    acc += c * Complex64::from_polar(1.0, TWO_PI * xi * (z - x0));
                }
            }
            acc * scale
        })
        .collect();
    WaveFunction::new(grid, values)
}

/// `|det A|^{-(1/p - 1/q + 1)} det(I + A^T A)^{1/2}` for a `d x d` matrix
/// given row-major.
pub fn dilation_constant(a: &[f64], d: usize, p: f64, q: f64) -> Result<f64> {
    if d == 0 || a.len() != d * d {
        return Err(Error::shape(format!("expected {} entries for a {d}x{d} matrix, got {}", d * d, a.len())));
    }
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::config(format!("exponents must be >= 1, got ({p}, {q})")));
    }
    let m = DMatrix::from_row_slice(d, d, a);
    let det = m.determinant();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).powi(d as i32);
    if !det.is_finite() || det.abs() <= 1e-14 * scale {
        return Err(Error::Singular(format!("determinant {det:e} of the dilation matrix")));
    }
    let gram = DMatrix::identity(d, d) + m.transpose() * &m;
    let exponent = 1.0 / p - 1.0 / q + 1.0;
    Ok(det.abs().powf(-exponent) * gram.determinant().sqrt())
}

/// `M^{inf,1}` norm of `x -> exp(i R^(N)(t, s, x, y0) / hbar)` with `y0`
/// frozen, taking the supremum over positions with `|x| <= L/2` so the
/// periodic seam does not enter.
pub fn frozen_amplitude_norm(
    expansion: &ActionExpansion,
    t: f64,
    y0: f64,
    lattice: &PhaseSpaceLattice,
) -> Result<f64> {
    let grid = *lattice.grid();
    let hbar = expansion.hbar();
    let mut values = Vec::with_capacity(grid.len());
    for x in grid.nodes() {
        let r = expansion.eval_remainder(t, x, y0)?;
        values.push((Complex64::i() * r / hbar).exp());
    }
    let f = WaveFunction::new(grid, values)?;
    let data = stft(&f, lattice)?;
    modulation_norm_within(&data, f64::INFINITY, 1.0, 0.5 * grid.half_width())
}

/// Discrete `M^{inf,1}(R^2)` norm of a two-point field with a product
/// Gaussian window, on the grid subsampled by `stride`, with window
/// positions every `position_stride` reduced nodes inside `|x|, |y| <= L/2`.
pub fn two_point_modulation_norm(field: &TwoPointField, stride: usize, position_stride: usize) -> Result<f64> {
    let grid = *field.grid();
    let m = grid.len();
    if stride == 0 || position_stride == 0 || m % stride != 0 || m / stride < 8 {
        return Err(Error::Lattice(format!(
            "stride {stride} does not give a reduced grid of at least 8 points from {m}"
        )));
    }
    let n = m / stride;
    let reduced = Grid::new(grid.half_width(), n)
        .map_err(|_| Error::Lattice(format!("reduced size {n} is not a power of two")))?;
    let hr = reduced.spacing();
    let g = gaussian_window(&reduced, 1.0)?;
    let gv = g.values();
    let sub: Vec<Complex64> = (0..n * n)
        .map(|idx| field.get((idx / n) * stride, (idx % n) * stride))
        .collect();
    let fft = Spectral::new(n);
    let positions: Vec<usize> = (0..n)
        .step_by(position_stride)
        .filter(|&p| reduced.x(p).abs() <= 0.5 * reduced.half_width())
        .collect();
    let mut sup = vec![0.0f64; n * n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for &p1 in &positions {
        for &p2 in &positions {
            for (idx, b) in buf.iter_mut().enumerate() {
                let (i, j) = (idx / n, idx % n);
                let w1 = gv[(i + n + n / 2 - p1) % n];
                let w2 = gv[(j + n + n / 2 - p2) % n];
                *b = sub[idx] * w1 * w2;
            }
            for row in buf.chunks_mut(n) {
                fft.forward(row);
            }
            for j in 0..n {
                for i in 0..n {
                    col[i] = buf[i * n + j];
                }
                fft.forward(&mut col);
                for i in 0..n {
                    buf[i * n + j] = col[i];
                }
            }
            for (s, b) in sup.iter_mut().zip(&buf) {
                *s = s.max(b.norm() * hr * hr);
            }
        }
    }
    let dw = 1.0 / (n as f64 * hr);
    Ok(sup.iter().sum::<f64>() * dw * dw)
}
