use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyode::Poly;

/// Exponents `s_1 .. s_{n+2}` attached to the roots `0, 1, u_1 .. u_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentVector(Vec<f64>);

impl ExponentVector {
    pub fn new(s: Vec<f64>) -> Self {
        ExponentVector(s)
    }

    /// Exponents with `s_3 = ... = s_{n+2} = 1`.
    pub fn unit_tail(n: usize, s1: f64, s2: f64) -> Self {
        let mut s = vec![1.0; n + 2];
        s[0] = s1;
        s[1] = s2;
        ExponentVector(s)
    }

    /// Zero-based access: index 0 is `s_1`, index `i + 2` belongs to `u_i`.
    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with one exponent replaced.
    pub fn with(&self, k: usize, value: f64) -> Self {
        let mut s = self.0.clone();
        s[k] = value;
        ExponentVector(s)
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n + 2 {
            return Err(Error::Dimension(format!(
                "expected {} exponents for n = {n}, got {}",
                n + 2,
                self.0.len()
            )));
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("exponents must be finite".into()));
        }
        Ok(())
    }
}

/// Real parameter point `1 < u_1 < u_2 < ... < u_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberPoint(Vec<f64>);

impl ChamberPoint {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::ChamberViolation("need at least one component".into()));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::ChamberViolation(format!("non-finite component in {u:?}")));
        }
        if u[0] <= 1.0 {
            return Err(Error::ChamberViolation(format!("u_1 = {} must exceed 1", u[0])));
        }
        if let Some(w) = u.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::ChamberViolation(format!(
                "ordering fails between components {} and {}: {:?}",
                w,
                w + 1,
                u
            )));
        }
        Ok(ChamberPoint(u))
    }

    pub(crate) fn new_unchecked(u: Vec<f64>) -> Self {
        ChamberPoint(u)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Copy with component `i` set to `x`, without chamber validation.
    pub(crate) fn with_coord(&self, i: usize, x: f64) -> Self {
        let mut u = self.0.clone();
        u[i] = x;
        ChamberPoint(u)
    }

    /// Copy with component `i` moved by `delta`, validated.
    pub fn shifted(&self, i: usize, delta: f64) -> Result<Self> {
        let mut u = self.0.clone();
        u[i] += delta;
        ChamberPoint::new(u)
    }

    /// Smallest gap among `0, 1, u_1, ..., u_n`.
    pub fn min_gap(&self) -> f64 {
        let mut pts = vec![0.0, 1.0];
        pts.extend_from_slice(&self.0);
        pts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Roots `0, 1, u_1, ..., u_n` as complex numbers.
    pub fn roots(&self) -> Vec<Complex64> {
        let mut r = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        r.extend(self.0.iter().map(|&x| Complex64::new(x, 0.0)));
        r
    }

    /// `D_i = u_i (u_i - 1) prod_{j != i} (u_i - u_j)`.
    pub fn denominator(&self, i: usize) -> f64 {
        let ui = self.0[i];
        let mut d = ui * (ui - 1.0);
        for (j, &uj) in self.0.iter().enumerate() {
            if j != i {
                d *= ui - uj;
            }
        }
        d
    }

    /// `P_i(zeta) = zeta (zeta - 1) prod_{j != i} (zeta - u_j) / D_i`, degree `n + 1`,
    /// normalized so that `P_i(u_i) = 1`.
    pub fn product_poly(&self, i: usize) -> Poly {
        let roots: Vec<Complex64> = self
            .roots()
            .into_iter()
            .enumerate()
            .filter(|&(k, _)| k != i + 2)
            .map(|(_, r)| r)
            .collect();
        Poly::from_roots(&roots).scale(Complex64::new(1.0 / self.denominator(i), 0.0))
    }
}
