//! Dense complex polynomials in two variables, used for exact action
//! coefficients of polynomial potentials.

use num_complex::Complex64;

use crate::quadrature::binomial;

/// `sum c[a][b] x^a y^b`, stored densely as `c[a * n + b]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly2 {
    n: usize,
    c: Vec<Complex64>,
}

impl Poly2 {
    fn with_size(n: usize) -> Self {
        Poly2 {
            n,
            c: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// `scale * P(x)` for real coefficients of `P` in increasing degree.
    pub fn in_x(coeffs: &[f64], scale: Complex64) -> Self {
        let n = coeffs.len().max(1);
        let mut p = Self::with_size(n);
        for (a, &c) in coeffs.iter().enumerate() {
            p.c[a * n] = scale * c;
        }
        p
    }

    /// Shrinks storage to the largest nonzero degree.
    fn trimmed(self) -> Poly2 {
        let z = Complex64::new(0.0, 0.0);
        let mut top = 0;
        for a in 0..self.n {
            for b in 0..self.n {
                if self.c[a * self.n + b] != z {
                    top = top.max(a).max(b);
                }
            }
        }
        let n = top + 1;
        if n == self.n {
            return self;
        }
        let mut p = Self::with_size(n);
        for a in 0..n {
            for b in 0..n {
                p.c[a * n + b] = self.c[a * self.n + b];
            }
        }
        p
    }

    fn coef(&self, a: usize, b: usize) -> Complex64 {
        if a < self.n && b < self.n {
            self.c[a * self.n + b]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let n = self.n.max(other.n);
        let mut p = Self::with_size(n);
        for a in 0..n {
            for b in 0..n {
                p.c[a * n + b] = self.coef(a, b) + other.coef(a, b);
            }
        }
        p.trimmed()
    }

    pub fn scale(&self, s: Complex64) -> Poly2 {
        Poly2 {
            n: self.n,
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let n = self.n + other.n - 1;
        let mut p = Self::with_size(n);
        for a in 0..self.n {
            for b in 0..self.n {
                let u = self.c[a * self.n + b];
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..other.n {
                    for d in 0..other.n {
                        p.c[(a + c) * n + b + d] += u * other.c[c * other.n + d];
                    }
                }
            }
        }
        p.trimmed()
    }

    /// `d/dx`.
    pub fn dx(&self) -> Poly2 {
        let n = self.n;
        let mut p = Self::with_size(n);
        for a in 1..n {
            for b in 0..n {
                p.c[(a - 1) * n + b] = self.c[a * n + b] * a as f64;
            }
        }
        p
    }

    /// `int_0^1 tau^m F(y + tau (x - y), y) d tau`.
    pub fn ray_average(&self, m: usize) -> Poly2 {
        let n = self.n;
        let mut p = Self::with_size(2 * n);
        let pn = p.n;
        for a in 0..n {
            for b in 0..n {
                let u = self.c[a * n + b];
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                // (y + tau (x-y))^a = sum_r C(a,r) tau^r (x-y)^r y^{a-r}
                for r in 0..=a {
                    let w = binomial(a, r) / (m + r + 1) as f64;
                    for q in 0..=r {
                        let sign = if (r - q) % 2 == 0 { 1.0 } else { -1.0 };
                        let coef = w * binomial(r, q) * sign;
                        p.c[q * pn + (a - q + b)] += u * coef;
                    }
                }
            }
        }
        p.trimmed()
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in (0..n).rev() {
            let mut row = Complex64::new(0.0, 0.0);
            for b in (0..n).rev() {
                row = row * y + self.c[a * n + b];
            }
            acc = acc * x + row;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn algebra() {
        let p = Poly2::in_x(&[1.0, 2.0], c(1.0)); // 1 + 2x
        let q = p.mul(&p); // 1 + 4x + 4x^2
        assert_eq!(q.eval(0.5, 3.0), c(4.0));
        assert_eq!(q.dx().eval(0.5, 0.0), c(8.0));
        assert_eq!(p.add(&q).eval(1.0, 0.0), c(12.0));
        assert_eq!(p.scale(Complex64::i()).eval(1.0, 0.0), Complex64::new(0.0, 3.0));
    }

    #[test]
    fn ray_average_of_quadratic() {
        // -x^2/2 averaged along the segment gives -(x^2 + xy + y^2)/6.
        let f = Poly2::in_x(&[0.0, 0.0, -0.5], c(1.0));
        let w = f.ray_average(0);
        for &(x, y) in &[(1.0, 1.0), (2.0, -3.0), (0.5, 0.25)] {
            let want = -(x * x + x * y + y * y) / 6.0;
            assert!((w.eval(x, y) - c(want)).norm() < 1e-14);
        }
        // Constant with weight tau^2: 1/3.
        let one = Poly2::in_x(&[1.0], c(1.0));
        assert!((one.ray_average(2).eval(4.0, 7.0) - c(1.0 / 3.0)).norm() < 1e-15);
    }
}
