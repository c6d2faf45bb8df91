//! Short-time action expansion `S^(N) = |x-y|^2 / (2(t-s)) + sum_k W_k (t-s)^k`.
//!
//! The coefficients solve the transport equations
//! `k W_k + (x-y) d_x W_k = F_k` with
//! `F_k = -1/2 sum_{j+l=k-1} d_x W_j d_x W_l - d_t^{k-1} V(s,x)/(k-1)! + (i hbar/2) d_x^2 W_{k-1}`,
//! whose continuous solution is `W_k = int_0^1 tau^{k-1} F_k(y + tau(x-y), y) d tau`.
//!
//! The part of `W_k` that is linear in `V` collapses to single ray integrals:
//! nested averages compose into the weight `p^{k-1+alpha} (1-p)^i / i!`,
//! which the potential integrates exactly. Products of lower coefficients
//! (first at `k = 3`) are integrated with panelled Gauss-Legendre.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::poly2::Poly2;
use crate::potential::{mode_coefficient, PotentialModel};
use crate::quadrature::{beta_exp_moment, binomial, factorial, GaussLegendre};

/// Default cap on the expansion order.
pub const DEFAULT_MAX_ORDER: usize = 4;
/// Default Gauss-Legendre node count for the tau integrals.
pub const DEFAULT_NODES: usize = 20;

/// Phase change (in radians) one panel of the tau rule is asked to resolve.
const PANEL_PHASE: f64 = 24.0;

/// Complex samples on the `(x_i, y_j)` product grid, row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl TwoPointField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        let m = grid.len();
        if values.len() != m * m {
            return Err(Error::shape(format!("expected {} entries, got {}", m * m, values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::shape("two-point field entries must be finite"));
        }
        Ok(TwoPointField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let m = grid.len();
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            let x = grid.x(i);
            for j in 0..m {
                values.push(f(x, grid.x(j)));
            }
        }
        TwoPointField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let m = self.grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Tunables for [`ActionExpansion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionOptions {
    pub max_order: usize,
    pub nodes: usize,
}

impl Default for ActionOptions {
    fn default() -> Self {
        ActionOptions {
            max_order: DEFAULT_MAX_ORDER,
            nodes: DEFAULT_NODES,
        }
    }
}

/// The coefficients `W_1..W_N` at left endpoint `s`, with lazily cached
/// grid tables of `d_x^alpha W_k`.
#[derive(Debug)]
pub struct ActionExpansion {
    model: PotentialModel,
    order: usize,
    s: f64,
    hbar: f64,
    grid: Grid,
    quad: GaussLegendre,
    /// Exact coefficients when `V` is polynomial in `x`.
    exact: Option<Vec<Poly2>>,
    tables: Vec<OnceLock<TwoPointField>>,
}

impl ActionExpansion {
    pub fn new(model: PotentialModel, order: usize, s: f64, hbar: f64, grid: Grid) -> Result<Self> {
        Self::with_options(model, order, s, hbar, grid, ActionOptions::default())
    }

    pub fn with_options(
        model: PotentialModel,
        order: usize,
        s: f64,
        hbar: f64,
        grid: Grid,
        options: ActionOptions,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::config("expansion order must be at least 1"));
        }
        if order > options.max_order {
            return Err(Error::config(format!(
                "expansion order {order} exceeds the cap {}",
                options.max_order
            )));
        }
        if !(hbar > 0.0 && hbar <= 1.0) {
            return Err(Error::config(format!("hbar must lie in (0, 1], got {hbar}")));
        }
        if !s.is_finite() {
            return Err(Error::config("left endpoint must be finite"));
        }
        if options.nodes == 0 {
            return Err(Error::config("quadrature needs at least one node"));
        }
        // W_N consumes d_t^{N-1} d_x^2 ... up to total order 2N.
        model.check_budget(order, 0)?;
        let exact = model
            .is_polynomial()
            .then(|| exact_coefficients(&model, order, s, hbar));
        let per_k = 2 * order + 1;
        Ok(ActionExpansion {
            model,
            order,
            s,
            hbar,
            grid,
            quad: GaussLegendre::new(options.nodes),
            exact,
            tables: (0..order * per_k).map(|_| OnceLock::new()).collect(),
        })
    }

    /// Same model and parameters at another left endpoint.
    pub fn at(&self, s: f64) -> Result<Self> {
        Self::with_options(
            self.model.clone(),
            self.order,
            s,
            self.hbar,
            self.grid,
            ActionOptions {
                max_order: self.order.max(DEFAULT_MAX_ORDER),
                nodes: self.quad.len(),
            },
        )
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check(&self, k: usize, alpha: usize) -> Result<()> {
        if k == 0 || k > self.order {
            return Err(Error::Index(format!("W_{k} requested but the expansion has N = {}", self.order)));
        }
        let limit = 2 * (self.order - k + 1);
        if alpha > limit {
            return Err(Error::DerivativeBudget {
                k,
                alpha,
                requested: 2 * k + alpha,
                budget: 2 * self.order + 2,
            });
        }
        Ok(())
    }

    /// `d_x^alpha W_k(x, y)`, evaluated directly (no tables).
    pub fn eval_w_derivative(&self, k: usize, alpha: usize, x: f64, y: f64) -> Result<Complex64> {
        self.check(k, alpha)?;
        Ok(self.w(k, alpha, x, y))
    }

    /// `F_k(x, y)`, the right-hand side of the k-th transport equation.
    pub fn eval_f(&self, k: usize, x: f64, y: f64) -> Result<Complex64> {
        self.check(k, 0)?;
        let mut f = self.products(k, 0, x, y);
        f -= self.model.envelope_derivative(k - 1, self.s) * self.model.spatial_derivative(0, x) / factorial(k - 1);
        if k >= 2 {
            f += self.ih2() * self.w(k - 1, 2, x, y);
        }
        Ok(f)
    }

    /// `R^(N)(t, s, x, y) = sum_k W_k(x, y) (t-s)^k`.
    pub fn eval_remainder(&self, t: f64, x: f64, y: f64) -> Result<Complex64> {
        let dt = self.dt(t)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=self.order).rev() {
            acc = (acc + self.w(k, 0, x, y)) * dt;
        }
        Ok(acc)
    }

    /// `S^(N)(t, s, x, y)`.
    pub fn eval_s_n(&self, t: f64, x: f64, y: f64) -> Result<Complex64> {
        let dt = self.dt(t)?;
        Ok(self.eval_remainder(t, x, y)? + (x - y) * (x - y) / (2.0 * dt))
    }

    fn dt(&self, t: f64) -> Result<f64> {
        if !(t > self.s) {
            return Err(Error::TimeOrder { s: self.s, t });
        }
        Ok(t - self.s)
    }

    /// Cached grid table of `d_x^alpha W_k`.
    pub fn table(&self, k: usize, alpha: usize) -> Result<&TwoPointField> {
        self.check(k, alpha)?;
        let idx = (k - 1) * (2 * self.order + 1) + alpha;
        Ok(self.tables[idx].get_or_init(|| self.build_table(k, alpha)))
    }

    /// `R^(N)` on the grid for a step of length `dt`.
    pub fn remainder_table(&self, dt: f64) -> Result<TwoPointField> {
        if !(dt > 0.0) {
            return Err(Error::TimeOrder { s: self.s, t: self.s + dt });
        }
        let m = self.grid.len();
        let mut values = vec![Complex64::new(0.0, 0.0); m * m];
        for k in (1..=self.order).rev() {
            let w = self.table(k, 0)?;
            for (acc, v) in values.iter_mut().zip(w.values()) {
                *acc = (*acc + v) * dt;
            }
        }
        Ok(TwoPointField { grid: self.grid, values })
    }

    fn ih2(&self) -> Complex64 {
        Complex64::new(0.0, 0.5 * self.hbar)
    }

    fn w(&self, k: usize, alpha: usize, x: f64, y: f64) -> Complex64 {
        self.linear_part(k, alpha, x, y) + self.nonlinear_part(k, alpha, x, y)
    }

    /// Weight of the `i`-th collapsed term: `(i hbar/2)^i * (-1) / ((k-1-i)! i!)`.
    fn linear_weight(&self, k: usize, i: usize) -> Complex64 {
        self.ih2().powu(i as u32) * (-1.0 / (factorial(k - 1 - i) * factorial(i)))
    }

    fn linear_part(&self, k: usize, alpha: usize, x: f64, y: f64) -> Complex64 {
        (0..k)
            .map(|i| {
                let moment = self.model.ray_moment(k - 1 - i, alpha + 2 * i, k - 1 + alpha, i, self.s, x, y);
                self.linear_weight(k, i) * moment
            })
            .sum()
    }

    fn panels(&self, k: usize, u: f64) -> usize {
        let phase = (k - 1) as f64 * self.model.max_frequency() * u.abs();
        ((phase / PANEL_PHASE).ceil() as usize).max(1)
    }

    fn nonlinear_part(&self, k: usize, alpha: usize, x: f64, y: f64) -> Complex64 {
        if k < 3 {
            return Complex64::new(0.0, 0.0);
        }
        let u = x - y;
        let p = (k - 1 + alpha) as i32;
        self.quad.integrate_panels(self.panels(k, u), |tau| {
            let z = y + tau * u;
            (self.products(k, alpha, z, y) + self.ih2() * self.nonlinear_part(k - 1, alpha + 2, z, y)) * tau.powi(p)
        })
    }

    /// `d_x^alpha` of `-1/2 sum_{j+l=k-1} d_x W_j d_x W_l` by Leibniz.
    fn products(&self, k: usize, alpha: usize, x: f64, y: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..k.saturating_sub(1) {
            let l = k - 1 - j;
            for beta in 0..=alpha {
                acc += self.w(j, beta + 1, x, y) * self.w(l, alpha - beta + 1, x, y) * binomial(alpha, beta);
            }
        }
        acc * -0.5
    }

    fn build_table(&self, k: usize, alpha: usize) -> TwoPointField {
        let grid = self.grid;
        if let Some(exact) = &self.exact {
            let mut p = exact[k - 1].clone();
            for _ in 0..alpha {
                p = p.dx();
            }
            return TwoPointField::from_fn(grid, |x, y| p.eval(x, y));
        }
        let m = grid.len();
        let h = grid.spacing();
        let mut values = vec![Complex64::new(0.0, 0.0); m * m];
        // Cosine modes: the linear part depends on (x, y) through e^{i b y}
        // and the offset x - y = d h only.
        for mode in self.model.modes() {
            if mode.a == 0.0 {
                continue;
            }
            let terms: Vec<(Complex64, Complex64, usize)> = (0..k)
                .filter_map(|i| {
                    let e = self.model.envelope_derivative(k - 1 - i, self.s);
                    (e != 0.0).then(|| (self.linear_weight(k, i) * e, mode_coefficient(*mode, alpha + 2 * i), i))
                })
                .collect();
            if terms.is_empty() {
                continue;
            }
            let mut plus = Vec::with_capacity(2 * m - 1);
            let mut minus = Vec::with_capacity(2 * m - 1);
            for d in -(m as i64 - 1)..(m as i64) {
                let z = mode.b * d as f64 * h;
                let (mut pp, mut mm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for &(w, c, i) in &terms {
                    // w Re(A) = (w A + w conj(A)) / 2 with A = c e^{iby} psi.
                    let a = c * beta_exp_moment(k - 1 + alpha, i, z);
                    pp += 0.5 * w * a;
                    mm += 0.5 * w * a.conj();
                }
                plus.push(pp);
                minus.push(mm);
            }
            let phases: Vec<Complex64> = grid.nodes().map(|y| Complex64::from_polar(1.0, mode.b * y)).collect();
            for i in 0..m {
                let row = &mut values[i * m..(i + 1) * m];
                for (j, v) in row.iter_mut().enumerate() {
                    let d = i + m - 1 - j;
                    let e = phases[j];
                    *v += e * plus[d] + e.conj() * minus[d];
                }
            }
        }
        let has_poly = self.model.polynomial().len() > alpha;
        if has_poly || k >= 3 {
            let no_modes = self.model.clone_without_modes();
            for i in 0..m {
                let x = grid.x(i);
                for j in 0..m {
                    let y = grid.x(j);
                    let v = &mut values[i * m + j];
                    if has_poly {
                        *v += (0..k)
                            .map(|q| {
                                self.linear_weight(k, q)
                                    * no_modes.ray_moment(k - 1 - q, alpha + 2 * q, k - 1 + alpha, q, self.s, x, y)
                            })
                            .sum::<Complex64>();
                    }
                    *v += self.nonlinear_part(k, alpha, x, y);
                }
            }
        }
        TwoPointField { grid, values }
    }
}

/// `W_1..W_N` as exact polynomials for a potential polynomial in `x`.
fn exact_coefficients(model: &PotentialModel, order: usize, s: f64, hbar: f64) -> Vec<Poly2> {
    let ih2 = Complex64::new(0.0, 0.5 * hbar);
    let mut poly = model.polynomial().to_vec();
    // Constant modes (b = 0) fold into the polynomial.
    for m in model.modes() {
        if m.b == 0.0 {
            if poly.is_empty() {
                poly.push(0.0);
            }
            poly[0] += m.a;
        }
    }
    let mut w: Vec<Poly2> = Vec::with_capacity(order);
    let mut grads: Vec<Poly2> = Vec::with_capacity(order);
    for k in 1..=order {
        let e = model.envelope_derivative(k - 1, s);
        let mut f = Poly2::in_x(&poly, Complex64::new(-e / factorial(k - 1), 0.0));
        for j in 1..k.saturating_sub(1) {
            let l = k - 1 - j;
            f = f.add(&grads[j - 1].mul(&grads[l - 1]).scale(Complex64::new(-0.5, 0.0)));
        }
        if k >= 2 {
            f = f.add(&grads[k - 2].dx().scale(ih2));
        }
        let wk = f.ray_average(k - 1);
        grads.push(wk.dx());
        w.push(wk);
    }
    w
}

/// `max |k W_k + (x-y) d_x W_k - F_k|` over the nodes of `grid` with
/// `|x|, |y| <= L/2`, evaluated directly.
pub fn transport_residual(expansion: &ActionExpansion, k: usize, grid: &Grid) -> Result<f64> {
    expansion.check(k, 1)?;
    let r = 0.5 * grid.half_width();
    let nodes: Vec<f64> = grid.nodes().filter(|x| x.abs() <= r).collect();
    let mut worst: f64 = 0.0;
    for &x in &nodes {
        for &y in &nodes {
            let lhs = expansion.w(k, 0, x, y) * k as f64 + expansion.w(k, 1, x, y) * (x - y);
            worst = worst.max((lhs - expansion.eval_f(k, x, y)?).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{make_low_regularity_potential, DEFAULT_ENVELOPE};
    use proptest::prelude::*;

    fn small() -> Grid {
        Grid::new(12.0, 32).unwrap()
    }

    fn cosine() -> PotentialModel {
        PotentialModel::cosine(1.0, 1.0)
    }

    fn modulated() -> PotentialModel {
        PotentialModel::time_modulated(cosine(), DEFAULT_ENVELOPE.to_vec()).unwrap()
    }

    /// Independent oracle: the recursion integrated literally, one panelled
    /// Gauss-Legendre rule per nesting level, no collapsed linear part.
    fn naive_w(model: &PotentialModel, s: f64, hbar: f64, k: usize, alpha: usize, x: f64, y: f64) -> Complex64 {
        let q = GaussLegendre::new(20);
        let u = x - y;
        let panels = 1 + (model.max_frequency() * u.abs() / 8.0) as usize;
        q.integrate_panels(panels, |tau| {
            naive_f(model, s, hbar, k, alpha, y + tau * u, y) * tau.powi((k - 1 + alpha) as i32)
        })
    }

    fn naive_f(model: &PotentialModel, s: f64, hbar: f64, k: usize, alpha: usize, z: f64, y: f64) -> Complex64 {
        let mut f = Complex64::new(
            -model.envelope_derivative(k - 1, s) * model.spatial_derivative(alpha, z) / factorial(k - 1),
            0.0,
        );
        for j in 1..k.saturating_sub(1) {
            let l = k - 1 - j;
            for b in 0..=alpha {
                f -= 0.5
                    * binomial(alpha, b)
                    * naive_w(model, s, hbar, j, b + 1, z, y)
                    * naive_w(model, s, hbar, l, alpha - b + 1, z, y);
            }
        }
        if k >= 2 {
            f += Complex64::new(0.0, 0.5 * hbar) * naive_w(model, s, hbar, k - 1, alpha + 2, z, y);
        }
        f
    }

    #[test]
    fn zero_potential_vanishes() {
        let e = ActionExpansion::new(PotentialModel::zero(), 3, 0.0, 1.0, small()).unwrap();
        for k in 1..=3 {
            for a in 0..=2 * (3 - k + 1) {
                assert_eq!(e.eval_w_derivative(k, a, 0.7, -1.2).unwrap(), Complex64::new(0.0, 0.0));
            }
            assert_eq!(e.table(k, 0).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn linear_closed_forms() {
        let e = ActionExpansion::new(PotentialModel::linear(1.0), 3, 0.0, 1.0, small()).unwrap();
        assert!((e.eval_w_derivative(1, 0, 1.0, 3.0).unwrap() - (-2.0)).norm() < 1e-14);
        for &(x, y) in &[(0.0, 0.0), (2.5, -4.0), (-7.0, 1.0)] {
            assert!((e.eval_w_derivative(1, 0, x, y).unwrap() + (x + y) / 2.0).norm() < 1e-12);
            assert!(e.eval_w_derivative(2, 0, x, y).unwrap().norm() < 1e-14);
            assert!((e.eval_w_derivative(3, 0, x, y).unwrap() + 1.0 / 24.0).norm() < 1e-14);
        }
        let t3 = e.table(3, 0).unwrap();
        assert!(t3.values().iter().all(|v| (v + 1.0 / 24.0).norm() < 1e-12));
    }

    #[test]
    fn harmonic_closed_forms() {
        let e = ActionExpansion::new(PotentialModel::harmonic(1.0), 2, 0.0, 1.0, small()).unwrap();
        assert!((e.eval_w_derivative(1, 0, 1.0, 1.0).unwrap() + 0.5).norm() < 1e-14);
        assert!((e.eval_w_derivative(2, 0, 0.3, -2.0).unwrap() - Complex64::new(0.0, -1.0 / 12.0)).norm() < 1e-14);
        let g = small();
        let t1 = e.table(1, 0).unwrap();
        for (i, j) in [(0, 31), (5, 5), (20, 3)] {
            let (x, y) = (g.x(i), g.x(j));
            assert!((t1.get(i, j) + (x * x + x * y + y * y) / 6.0).norm() < 1e-10);
        }
    }

    #[test]
    fn action_values() {
        let e = ActionExpansion::new(PotentialModel::zero(), 1, 0.2, 1.0, small()).unwrap();
        assert!((e.eval_s_n(0.7, 1.0, -1.0).unwrap() - 4.0).norm() < 1e-14);
        assert!(matches!(e.eval_s_n(0.2, 0.0, 0.0), Err(Error::TimeOrder { .. })));
        // First order: W_1 = -int_0^1 V(tau x + (1-tau) y) d tau.
        let e = ActionExpansion::new(cosine(), 1, 0.0, 1.0, small()).unwrap();
        let (x, y, t): (f64, f64, f64) = (1.3, -0.4, 0.3);
        let want = (x - y) * (x - y) / (2.0 * t) - t * (x.sin() - y.sin()) / (x - y);
        assert!((e.eval_s_n(t, x, y).unwrap() - want).norm() < 1e-13);
        let e = ActionExpansion::new(PotentialModel::linear(1.0), 3, 0.0, 1.0, small()).unwrap();
        let tt: f64 = 0.4;
        assert!((e.eval_s_n(tt, 0.0, 0.0).unwrap() + tt.powi(3) / 24.0).norm() < 1e-14);
    }

    #[test]
    fn index_and_budget_errors() {
        let e = ActionExpansion::new(cosine(), 2, 0.0, 1.0, small()).unwrap();
        assert!(matches!(e.eval_w_derivative(3, 0, 0.0, 0.0), Err(Error::Index(_))));
        assert!(matches!(e.eval_w_derivative(0, 0, 0.0, 0.0), Err(Error::Index(_))));
        assert!(e.eval_w_derivative(2, 2, 0.0, 0.0).is_ok());
        assert!(matches!(e.eval_w_derivative(2, 3, 0.0, 0.0), Err(Error::DerivativeBudget { .. })));
        assert!(matches!(
            ActionExpansion::new(make_low_regularity_potential(1, 8).unwrap(), 2, 0.0, 1.0, small()),
            Err(Error::DerivativeBudget { .. })
        ));
        assert!(matches!(ActionExpansion::new(cosine(), 5, 0.0, 1.0, small()), Err(Error::Config(_))));
        assert!(matches!(ActionExpansion::new(cosine(), 1, 0.0, 1.5, small()), Err(Error::Config(_))));
    }

    #[test]
    fn matches_naive_recursion() {
        let models = [cosine(), modulated(), make_low_regularity_potential(3, 6).unwrap(), PotentialModel::harmonic(0.7)];
        for model in models {
            let e = ActionExpansion::new(model.clone(), 3, 0.25, 1.0, small()).unwrap();
            for &(x, y) in &[(0.4, -1.1), (3.0, 2.0), (-5.0, 4.5)] {
                for k in 1..=3 {
                    for a in [0, 1, 2] {
                        let got = e.eval_w_derivative(k, a, x, y).unwrap();
                        let want = naive_w(&model, 0.25, 1.0, k, a, x, y);
                        assert!((got - want).norm() < 1e-11, "{:?} k={k} a={a}: {got} vs {want}", model.kind());
                    }
                }
            }
        }
    }

    #[test]
    fn tables_match_direct_evaluation() {
        let g = small();
        for model in [cosine(), modulated(), PotentialModel::harmonic(1.0), make_low_regularity_potential(2, 5).unwrap()] {
            let e = ActionExpansion::new(model.clone(), 2, 0.3, 1.0, g).unwrap();
            for (k, a) in [(1, 0), (1, 1), (1, 2), (2, 0), (2, 2)] {
                let t = e.table(k, a).unwrap();
                for (i, j) in [(0, 31), (31, 0), (7, 19), (16, 16)] {
                    let d = e.eval_w_derivative(k, a, g.x(i), g.x(j)).unwrap();
                    assert!((t.get(i, j) - d).norm() < 1e-12, "{:?} k={k} a={a}", model.kind());
                }
            }
        }
        let e = ActionExpansion::new(cosine(), 3, 0.0, 1.0, g).unwrap();
        let t = e.table(3, 1).unwrap();
        for (i, j) in [(0, 31), (9, 22)] {
            let d = e.eval_w_derivative(3, 1, g.x(i), g.x(j)).unwrap();
            assert!((t.get(i, j) - d).norm() < 1e-12);
        }
    }

    #[test]
    fn remainder_table_is_horner_sum() {
        let g = small();
        let e = ActionExpansion::new(cosine(), 2, 0.0, 1.0, g).unwrap();
        let r = e.remainder_table(0.2).unwrap();
        for (i, j) in [(3, 4), (30, 1)] {
            let d = e.eval_remainder(0.2, g.x(i), g.x(j)).unwrap();
            assert!((r.get(i, j) - d).norm() < 1e-13);
        }
    }

    #[test]
    fn transport_residuals() {
        let g = Grid::new(12.0, 32).unwrap();
        let zero = ActionExpansion::new(PotentialModel::zero(), 2, 0.0, 1.0, g).unwrap();
        assert_eq!(transport_residual(&zero, 1, &g).unwrap(), 0.0);
        let lin = ActionExpansion::new(PotentialModel::linear(1.0), 3, 0.0, 1.0, g).unwrap();
        assert!(transport_residual(&lin, 1, &g).unwrap() <= 1e-12);
        let cos = ActionExpansion::new(cosine(), 3, 0.0, 1.0, g).unwrap();
        for k in 1..=2 {
            assert!(transport_residual(&cos, k, &g).unwrap() <= 1e-8);
        }
        assert!(transport_residual(&cos, 3, &g).unwrap() <= 1e-6);
        let m = ActionExpansion::new(modulated(), 3, 0.5, 1.0, g).unwrap();
        for k in 1..=3 {
            assert!(transport_residual(&m, k, &g).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn realness_split() {
        let a = ActionExpansion::new(cosine(), 2, 0.0, 1.0, small()).unwrap();
        let b = ActionExpansion::new(cosine(), 2, 0.0, 0.5, small()).unwrap();
        for &(x, y) in &[(0.1, 2.0), (-3.0, 1.0), (4.0, 4.0)] {
            assert_eq!(a.eval_w_derivative(1, 0, x, y).unwrap().im, 0.0);
            let ia = a.eval_w_derivative(2, 0, x, y).unwrap().im;
            let ib = b.eval_w_derivative(2, 0, x, y).unwrap().im;
            assert!((ia - 2.0 * ib).abs() < 1e-14);
        }
    }

    #[test]
    fn even_potentials_give_even_coefficients() {
        let g = Grid::new(12.0, 32).unwrap();
        let m = g.len();
        for model in [cosine(), PotentialModel::harmonic(1.0), make_low_regularity_potential(2, 8).unwrap()] {
            let e = ActionExpansion::new(model, 2, 0.0, 1.0, g).unwrap();
            for k in 1..=2 {
                let t = e.table(k, 0).unwrap();
                // x_i -> -x_i maps node i to M - i (node 0 has no mirror).
                for i in 1..m {
                    for j in 1..m {
                        assert!((t.get(i, j) - t.get(m - i, m - j)).norm() < 1e-10);
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn derivative_consistency(x in -6.0f64..6.0, y in -6.0f64..6.0, which in 0usize..3) {
            let model = [cosine(), modulated(), make_low_regularity_potential(3, 6).unwrap()][which].clone();
            let e = ActionExpansion::new(model, 3, 0.1, 1.0, small()).unwrap();
            let h = 1e-4;
            for k in 1..=3 {
                for a in 0..2 * (3 - k + 1) {
                    let d = e.eval_w_derivative(k, a + 1, x, y).unwrap();
                    let fd = (e.eval_w_derivative(k, a, x + h, y).unwrap() - e.eval_w_derivative(k, a, x - h, y).unwrap()) / (2.0 * h);
                    let scale = d.norm().max(e.eval_w_derivative(k, a, x, y).unwrap().norm()).max(1e-3);
                    prop_assert!((d - fd).norm() <= 1e-5 * scale, "k={} a={}: {} vs {}", k, a, d, fd);
                }
            }
        }
    }
}
