//! Gauss-Legendre rules on [0, 1] and exact moments of `p^m (1-p)^i e^{izp}`.

use num_complex::Complex64;

/// Gauss-Legendre rule mapped to the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [-1, 1] -> [0, 1].
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over [0, 1].
    pub fn integrate<T>(&self, f: impl Fn(f64) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }

    /// Integral over [0, 1] split into `panels` equal sub-intervals.
    pub fn integrate_panels<T>(&self, panels: usize, f: impl Fn(f64) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum,
    {
        let panels = panels.max(1);
        let width = 1.0 / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let a = p as f64 * width;
                self.nodes
                    .iter()
                    .zip(&self.weights)
                    .map(move |(&x, &w)| (a + x * width, w * width))
            })
            .map(|(x, w)| f(x) * w)
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `phi_j(z) = int_0^1 p^j e^{izp} dp` for `j = 0..=m_max`.
pub fn exp_moments(m_max: usize, z: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m_max + 1);
    if z.abs() < 8.0 {
        // Power series: sum_n (iz)^n / (n! (n + j + 1)).
        let iz = Complex64::new(0.0, z);
        for j in 0..=m_max {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(1.0 / (j as f64 + 1.0), 0.0);
            for n in 1..120 {
                term *= iz / n as f64;
                let add = term / (n + j + 1) as f64;
                sum += add;
                if term.norm() < 1e-18 {
                    break;
                }
            }
            out.push(sum);
        }
    } else {
        // Integration by parts, stable upward for |z| > m.
        let iz = Complex64::new(0.0, z);
        let e = Complex64::from_polar(1.0, z);
        let mut prev = (e - 1.0) / iz;
        out.push(prev);
        for j in 1..=m_max {
            prev = (e - prev * j as f64) / iz;
            out.push(prev);
        }
    }
    out
}

/// `psi(m, i, z) = int_0^1 p^m (1-p)^i e^{izp} dp`.
pub fn beta_exp_moment(m: usize, i: usize, z: f64) -> Complex64 {
    let phi = exp_moments(m + i, z);
    let mut binom = 1.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for r in 0..=i {
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        sum += phi[m + r] * (sign * binom);
        binom = binom * (i - r) as f64 / (r + 1) as f64;
    }
    sum
}

/// Binomial coefficient as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}
