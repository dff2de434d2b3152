use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense univariate polynomial with complex coefficients, lowest degree first.
///
/// The coefficient vector is never trimmed: a product or quotient keeps the
/// length implied by its degree bound even when the leading entry cancels.
/// An empty coefficient vector is the zero polynomial of degree -1.
#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly {
            coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    /// Zero polynomial carrying `len` explicit coefficients.
    pub fn zeros(len: usize) -> Self {
        Poly {
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// The monomial `zeta^k`.
    pub fn monomial(k: usize) -> Self {
        let mut p = Self::zeros(k + 1);
        p.coeffs[k] = Complex64::new(1.0, 0.0);
        p
    }

    /// `prod (zeta - r)` over the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots.iter().fold(Poly::constant(Complex64::new(1.0, 0.0)), |acc, &r| {
            acc.mul_linear(r)
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Number of stored coefficients (degree bound + 1).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Declared degree, `None` for the empty polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `zeta^k`, zero beyond the stored range.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        poly_eval(self, z)
    }

    /// Value and first derivative by a doubled Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Multiplies by `(zeta - root)`, growing the length by one.
    pub fn mul_linear(&self, root: Complex64) -> Poly {
        let mut out = Self::zeros(self.coeffs.len() + 1);
        for (k, &c) in self.coeffs.iter().enumerate() {
            out.coeffs[k + 1] += c;
            out.coeffs[k] -= root * c;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// Pads with zero coefficients up to `len` entries.
    pub fn padded(&self, len: usize) -> Poly {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < len {
            coeffs.resize(len, Complex64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.len().max(rhs.len());
        Poly {
            coeffs: (0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect(),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.len().max(rhs.len());
        Poly {
            coeffs: (0..len).map(|k| self.coeff(k) - rhs.coeff(k)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_empty() || rhs.is_empty() {
            return Poly::default();
        }
        let mut out = Poly::zeros(self.len() + rhs.len() - 1);
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}

/// Horner evaluation.
pub fn poly_eval(p: &Poly, z: Complex64) -> Complex64 {
    p.coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Synthetic division by `(zeta - root)`: `p = (zeta - root) * quotient + remainder`.
pub fn poly_div_linear(p: &Poly, root: Complex64) -> (Poly, Complex64) {
    let d = p.coeffs.len();
    if d == 0 {
        return (Poly::default(), Complex64::new(0.0, 0.0));
    }
    let mut quotient = vec![Complex64::new(0.0, 0.0); d - 1];
    let mut carry = Complex64::new(0.0, 0.0);
    for k in (0..d).rev() {
        let next = p.coeffs[k] + carry * root;
        if k == 0 {
            return (Poly::new(quotient), next);
        }
        quotient[k - 1] = next;
        carry = next;
    }
    unreachable!()
}

/// Interpolating polynomial through `(z_k, value_k)`, degree `samples.len() - 1`.
///
/// Builds the Newton divided-difference table, then expands the Newton form
/// into monomial coefficients.
pub fn poly_interp(samples: &[(Complex64, Complex64)]) -> Result<Poly> {
    let m = samples.len();
    if m == 0 {
        return Ok(Poly::default());
    }
    for i in 0..m {
        for j in 0..i {
            if samples[i].0 == samples[j].0 {
                return Err(Error::DuplicateNode(i));
            }
        }
    }
    let xs: Vec<Complex64> = samples.iter().map(|s| s.0).collect();
    let mut dd: Vec<Complex64> = samples.iter().map(|s| s.1).collect();
    for level in 1..m {
        for i in (level..m).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // Horner-like expansion of the nested Newton form.
    let mut acc = Poly::constant(dd[m - 1]);
    for k in (0..m - 1).rev() {
        acc = acc.mul_linear(xs[k]);
        acc.coeffs[0] += dd[k];
    }
    Ok(acc)
}

/// `count` Chebyshev points of the first kind mapped into `[a, b]`.
pub fn chebyshev_nodes(count: usize, a: f64, b: f64) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..count)
        .map(|k| {
            let angle = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * count) as f64;
            mid + half * angle.cos()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_hand_values() {
        assert_eq!(poly_eval(&Poly::from_real(&[1.0]), c(5.0)), c(1.0));
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(poly_eval(&Poly::from_real(&[0.0, 1.0]), i), i);
        assert_eq!(poly_eval(&Poly::from_real(&[-1.0, 0.0, 1.0]), c(2.0)), c(3.0));
    }

    #[test]
    fn div_linear_examples() {
        let a = c(2.5);
        let (q, r) = poly_div_linear(&Poly::new(vec![-a, c(1.0)]), a);
        assert_eq!(q.coeffs(), &[c(1.0)]);
        assert_eq!(r, c(0.0));

        let (q, r) = poly_div_linear(&Poly::from_real(&[1.0]), c(7.0));
        assert!(q.is_empty());
        assert_eq!(r, c(1.0));

        let (q, r) = poly_div_linear(&Poly::from_real(&[-1.0, 0.0, 1.0]), c(2.0));
        assert_eq!(q.coeffs(), &[c(2.0), c(1.0)]);
        assert_eq!(r, c(3.0));
    }

    #[test]
    fn interp_small_cases() {
        let p = poly_interp(&[(c(0.0), c(1.0)), (c(1.0), c(1.0))]).unwrap();
        assert!((p.coeff(0) - c(1.0)).norm() < 1e-15);
        assert!(p.coeff(1).norm() < 1e-15);

        let p = poly_interp(&[(c(0.0), c(0.0)), (c(1.0), c(1.0)), (c(-1.0), c(-1.0))]).unwrap();
        assert!(p.coeff(0).norm() < 1e-15);
        assert!((p.coeff(1) - c(1.0)).norm() < 1e-15);
        assert!(p.coeff(2).norm() < 1e-15);
    }

    #[test]
    fn interp_rejects_duplicates() {
        let err = poly_interp(&[(c(0.5), c(1.0)), (c(0.5), c(2.0))]).unwrap_err();
        assert_eq!(err, Error::DuplicateNode(1));
    }

    #[test]
    fn derivative_pass_matches_hand_derivative() {
        let p = Poly::from_real(&[1.0, -2.0, 0.0, 3.0]);
        let (v, dv) = p.eval_with_derivative(c(2.0));
        assert_eq!(v, c(1.0 - 4.0 + 24.0));
        assert_eq!(dv, c(-2.0 + 36.0));
    }

    #[test]
    fn from_roots_vanishes_at_roots() {
        let roots = [c(2.0), c(3.0), Complex64::new(0.5, -1.0)];
        let p = Poly::from_roots(&roots);
        assert_eq!(p.len(), 4);
        for r in roots {
            assert!(p.eval(r).norm() < 1e-13);
        }
    }

    #[test]
    fn chebyshev_nodes_inside_interval() {
        let nodes = chebyshev_nodes(5, -2.0, -0.5);
        assert!(nodes.iter().all(|&x| x > -2.0 && x < -0.5));
    }
}
