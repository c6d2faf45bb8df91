//! The residual amplitude `g_N` of the parametrix `E^(N)` and its scaling
//! in `t - s`.
//!
//! `g_N = sum_{k=N}^{2N} -1/2 sum_{j+l=k, 1<=j,l<=N} d_x W_j d_x W_l (t-s)^k
//!        + (i hbar/2) d_x^2 W_N (t-s)^N
//!        - (t-s)^N/(N-1)! int_0^1 (1-tau)^{N-1} d_t^N V((1-tau)s + tau t, x) d tau`.

use num_complex::Complex64;
use serde::Serialize;

use crate::action::{ActionExpansion, TwoPointField};
use crate::error::{Error, Result};
use crate::grid::{fit_order, Grid};
use crate::potential::PotentialModel;
use crate::quadrature::{factorial, GaussLegendre};
use crate::timefreq::two_point_modulation_norm;

/// Norms at or below this count as identically zero.
pub const NORM_FLOOR: f64 = 1e-12;

fn check_times(expansion: &ActionExpansion, t: f64, s: f64) -> Result<f64> {
    if !(t > s) {
        return Err(Error::TimeOrder { s, t });
    }
    if expansion.model().is_time_dependent() && (expansion.s() - s).abs() > 1e-14 * (1.0 + s.abs()) {
        return Err(Error::config(format!(
            "expansion built at s = {} evaluated with s = {s}",
            expansion.s()
        )));
    }
    Ok(t - s)
}

/// `-(t-s)^N/(N-1)! int_0^1 (1-tau)^{N-1} d_t^N V((1-tau)s + tau t, x) d tau`.
fn taylor_remainder(model: &PotentialModel, order: usize, s: f64, t: f64, x: f64) -> Result<f64> {
    model.check_budget(order, 0)?;
    let dt = t - s;
    let spatial = model.spatial_derivative(0, x);
    if spatial == 0.0 {
        return Ok(0.0);
    }
    let q = GaussLegendre::new(20);
    let integral = q.integrate(|tau| {
        (1.0 - tau).powi(order as i32 - 1) * model.envelope_derivative(order, (1.0 - tau) * s + tau * t)
    });
    Ok(-dt.powi(order as i32) / factorial(order - 1) * integral * spatial)
}

/// `g_N(hbar, t, s, x, y)`, evaluated directly.
pub fn eval_g_n(expansion: &ActionExpansion, t: f64, s: f64, x: f64, y: f64) -> Result<Complex64> {
    let dt = check_times(expansion, t, s)?;
    let n = expansion.order();
    let mut grads = Vec::with_capacity(n);
    for j in 1..=n {
        grads.push(expansion.eval_w_derivative(j, 1, x, y)?);
    }
    let lap = expansion.eval_w_derivative(n, 2, x, y)?;
    let tail = taylor_remainder(expansion.model(), n, s, t, x)?;
    Ok(assemble(&grads, lap, tail, dt, n, expansion.hbar()))
}

fn assemble(grads: &[Complex64], lap: Complex64, tail: f64, dt: f64, n: usize, hbar: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in n..=2 * n {
        let mut s = Complex64::new(0.0, 0.0);
        for j in (k - n).max(1)..=n.min(k - 1) {
            s += grads[j - 1] * grads[k - j - 1];
        }
        acc += -0.5 * s * dt.powi(k as i32);
    }
    acc + Complex64::new(0.0, 0.5 * hbar) * lap * dt.powi(n as i32) + tail
}

/// `g_N` sampled on the expansion grid.
#[derive(Debug, Clone)]
pub struct ResidualField {
    pub t: f64,
    pub s: f64,
    pub values: TwoPointField,
}

impl ResidualField {
    pub fn sup_norm(&self) -> f64 {
        self.values.max_abs()
    }
}

/// `g_N` on the full grid from the cached derivative tables.
pub fn residual_field(expansion: &ActionExpansion, t: f64, s: f64) -> Result<ResidualField> {
    let dt = check_times(expansion, t, s)?;
    let n = expansion.order();
    let grid = *expansion.grid();
    let m = grid.len();
    let grads = (1..=n)
        .map(|j| expansion.table(j, 1))
        .collect::<Result<Vec<_>>>()?;
    let lap = expansion.table(n, 2)?;
    let tails = grid
        .nodes()
        .map(|x| taylor_remainder(expansion.model(), n, s, t, x))
        .collect::<Result<Vec<f64>>>()?;
    let mut values = Vec::with_capacity(m * m);
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..m {
        for j in 0..m {
            for (q, table) in grads.iter().enumerate() {
                g[q] = table.get(i, j);
            }
            values.push(assemble(&g, lap.get(i, j), tails[i], dt, n, expansion.hbar()));
        }
    }
    Ok(ResidualField {
        t,
        s,
        values: TwoPointField::new(grid, values)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParametrixScan {
    pub dts: Vec<f64>,
    pub norms: Vec<f64>,
    pub fitted_order: f64,
    pub target_order: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Sup-norms of `g_N(s + dt, s)` over `grid` for each `dt`, with the fitted
/// log-log slope; passes when the slope is at least `N - tolerance`.
pub fn parametrix_norm_scan(
    model: &PotentialModel,
    order: usize,
    s: f64,
    dts: &[f64],
    hbar: f64,
    grid: &Grid,
    tolerance: f64,
) -> Result<ParametrixScan> {
    check_ladder(dts)?;
    let expansion = ActionExpansion::new(model.clone(), order, s, hbar, *grid)?;
    let norms = dts
        .iter()
        .map(|&dt| Ok(residual_field(&expansion, s + dt, s)?.sup_norm()))
        .collect::<Result<Vec<f64>>>()?;
    finish(dts, norms, order, tolerance)
}

/// The same scan measured in the discrete `M^{inf,1}(R^2)` norm on a
/// subsampled grid (see [`two_point_modulation_norm`]).
pub fn parametrix_modulation_scan(
    model: &PotentialModel,
    order: usize,
    s: f64,
    dts: &[f64],
    hbar: f64,
    grid: &Grid,
    stride: usize,
    position_stride: usize,
    tolerance: f64,
) -> Result<ParametrixScan> {
    check_ladder(dts)?;
    let expansion = ActionExpansion::new(model.clone(), order, s, hbar, *grid)?;
    let norms = dts
        .iter()
        .map(|&dt| two_point_modulation_norm(&residual_field(&expansion, s + dt, s)?.values, stride, position_stride))
        .collect::<Result<Vec<f64>>>()?;
    finish(dts, norms, order, tolerance)
}

fn check_ladder(dts: &[f64]) -> Result<()> {
    if dts.len() < 3 {
        return Err(Error::config("step ladder needs at least three entries"));
    }
    if dts.windows(2).any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-9) {
        return Err(Error::config("step ladder must be dyadic and decreasing"));
    }
    Ok(())
}

fn finish(dts: &[f64], norms: Vec<f64>, order: usize, tolerance: f64) -> Result<ParametrixScan> {
    if let Some(n) = norms.iter().find(|&&n| n <= NORM_FLOOR) {
        return Err(Error::DegenerateFit(format!(
            "residual norm {n:.3e} is at the rounding floor: the parametrix is exact for this potential"
        )));
    }
    let fitted_order = fit_order(dts, &norms)?;
    Ok(ParametrixScan {
        dts: dts.to_vec(),
        norms,
        fitted_order,
        target_order: order as f64,
        tolerance,
        passed: fitted_order >= order as f64 - tolerance,
    })
}
