//! Rational family: the linear system for the coefficients of `phi(zeta)` as a
//! connection on coefficient space, its flatness, and basis transport.
//!
//! Component indices are zero-based throughout: `u[i]` is the (i+1)-th
//! parameter and carries exponent `s[i + 2]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix};
use crate::polyode::{
    chebyshev_nodes, fd_derivative, ode_transport, poly_div_linear, poly_interp, PathInU, Poly,
};

mod powers;
mod types;

pub use powers::{power_product, Branch, CUT_EXCLUSION};
pub use types::{ChamberPoint, ExponentVector};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Evaluation strategy for the right-hand side of the linear system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionMode {
    /// Exact synthetic division of every pole term.
    ExactDivision,
    /// Sample the rational right-hand side and interpolate.
    Interpolation(InterpNodes),
}

/// Sampling nodes for [`ConnectionMode::Interpolation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterpNodes {
    /// Chebyshev points in a real interval that must avoid `{0, 1, u_1..u_n}`.
    Chebyshev { a: f64, b: f64 },
    /// Rotated roots of unity on a circle about the origin.
    Circle { radius: f64 },
}

impl Default for InterpNodes {
    fn default() -> Self {
        InterpNodes::Chebyshev { a: -1.5, b: -0.25 }
    }
}

impl InterpNodes {
    fn nodes(&self, count: usize) -> Vec<Complex64> {
        match *self {
            InterpNodes::Chebyshev { a, b } => chebyshev_nodes(count, a, b).into_iter().map(re).collect(),
            InterpNodes::Circle { radius } => (0..count)
                .map(|k| {
                    let angle = std::f64::consts::TAU * (k as f64 + 0.25) / count as f64;
                    Complex64::from_polar(radius, angle)
                })
                .collect(),
        }
    }
}

/// Right-hand side of the `u_i` equation applied to `phi`, by exact division.
///
/// With `P_i(zeta) = zeta (zeta - 1) prod_{j != i} (zeta - u_j) / D_i` the
/// result is
/// `phi(u_i) * sum_{r != u_i} (s_r - 1) P_i / (zeta - r) - s_{i+2} (phi - phi(u_i) P_i) / (zeta - u_i)`.
/// Each pole term divides exactly, so the output has `n + 1` coefficients.
pub fn apply_connection(u: &ChamberPoint, s: &ExponentVector, i: usize, phi: &Poly) -> Result<Poly> {
    let n = u.n();
    check_index(i, n)?;
    s.check_len(n)?;
    let roots = u.roots();
    let ui = roots[i + 2];
    let inv_d = re(1.0 / u.denominator(i));
    let phi = phi.padded(n + 1);
    let phi_ui = phi.eval(ui);

    let mut out = Poly::zeros(n + 1);
    for r_idx in 0..roots.len() {
        if r_idx == i + 2 {
            continue;
        }
        let weight = s.get(r_idx) - 1.0;
        if weight == 0.0 {
            continue;
        }
        let others: Vec<Complex64> = roots
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != r_idx && k != i + 2)
            .map(|(_, &z)| z)
            .collect();
        let term = Poly::from_roots(&others).scale(phi_ui * inv_d * weight);
        out = &out + &term;
    }

    let p_i = u.product_poly(i);
    let numerator = &phi - &p_i.scale(phi_ui);
    let (quotient, _remainder) = poly_div_linear(&numerator, ui);
    out = &out - &quotient.scale(re(s.get(i + 2)));
    Ok(Poly::new(out.coeffs()[..n + 1].to_vec()))
}

/// Literal rational right-hand side at a point `zeta` away from the poles.
pub fn connection_rhs_at(u: &ChamberPoint, s: &ExponentVector, i: usize, phi: &Poly, zeta: Complex64) -> Complex64 {
    let roots = u.roots();
    let ui = roots[i + 2];
    let mut bracket = Complex64::new(0.0, 0.0);
    for (k, &r) in roots.iter().enumerate() {
        let w = if k == i + 2 { s.get(k) } else { s.get(k) - 1.0 };
        bracket += w / (zeta - r);
    }
    let p_i = u.product_poly(i).eval(zeta);
    phi.eval(ui) * p_i * bracket - phi.eval(zeta) * s.get(i + 2) / (zeta - ui)
}

fn apply_by_interpolation(
    u: &ChamberPoint,
    s: &ExponentVector,
    i: usize,
    phi: &Poly,
    nodes: InterpNodes,
) -> Result<Poly> {
    let n = u.n();
    let pts = nodes.nodes(n + 1);
    let roots = u.roots();
    for z in &pts {
        if roots.iter().any(|r| (z - r).norm() < 1e-8) {
            return Err(Error::SingularSample(format!("{z}")));
        }
    }
    let samples: Vec<(Complex64, Complex64)> = pts
        .iter()
        .map(|&z| (z, connection_rhs_at(u, s, i, phi, z)))
        .collect();
    poly_interp(&samples)
}

/// Connection matrix `M_i(u)` with `phi_{u_i} = M_i phi` in monomial coordinates.
///
/// Column `k` is the right-hand side applied to `zeta^k`.
pub fn connection_matrix(u: &ChamberPoint, s: &ExponentVector, i: usize) -> Result<CMatrix> {
    connection_matrix_with(u, s, i, ConnectionMode::ExactDivision)
}

pub fn connection_matrix_with(u: &ChamberPoint, s: &ExponentVector, i: usize, mode: ConnectionMode) -> Result<CMatrix> {
    let n = u.n();
    check_index(i, n)?;
    s.check_len(n)?;
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for k in 0..=n {
        let col = match mode {
            ConnectionMode::ExactDivision => apply_connection(u, s, i, &Poly::monomial(k))?,
            ConnectionMode::Interpolation(nodes) => apply_by_interpolation(u, s, i, &Poly::monomial(k), nodes)?,
        };
        for r in 0..=n {
            m[(r, k)] = col.coeff(r);
        }
    }
    Ok(m)
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}

/// Flatness obstruction `d_j M_i - d_i M_j + M_i M_j - M_j M_i` in max-norm.
///
/// Partials come from the fourth-order central stencil with step
/// `h * max(1, |u_k|)` along coordinate `k`; every stencil point must stay in
/// the chamber. `i == j` returns zero.
pub fn zero_curvature_residual(u: &ChamberPoint, s: &ExponentVector, i: usize, j: usize, h: f64) -> Result<f64> {
    zero_curvature_residual_split(u, s, s, i, j, h)
}

/// As [`zero_curvature_residual`], building `M_i` from `s_i` and `M_j` from `s_j`.
pub fn zero_curvature_residual_split(
    u: &ChamberPoint,
    s_i: &ExponentVector,
    s_j: &ExponentVector,
    i: usize,
    j: usize,
    h: f64,
) -> Result<f64> {
    let n = u.n();
    check_index(i, n)?;
    check_index(j, n)?;
    if i == j {
        return Ok(0.0);
    }
    let step_i = h * u.get(i).abs().max(1.0);
    let step_j = h * u.get(j).abs().max(1.0);
    for (k, step) in [(i, step_i), (j, step_j)] {
        for mult in [-2.0, 2.0] {
            u.shifted(k, mult * step)?;
        }
    }
    let mi = connection_matrix(u, s_i, i)?;
    let mj = connection_matrix(u, s_j, j)?;
    let d_j_mi: CMatrix = fd_derivative(
        |x| connection_matrix(&u.with_coord(j, x), s_i, i).expect("stencil checked"),
        u.get(j),
        step_j,
    );
    let d_i_mj: CMatrix = fd_derivative(
        |x| connection_matrix(&u.with_coord(i, x), s_j, j).expect("stencil checked"),
        u.get(i),
        step_i,
    );
    let curvature = d_j_mi - d_i_mj + &mi * &mj - &mj * &mi;
    Ok(max_abs(&curvature))
}

/// Fundamental matrix of `dphi = sum_i M_i phi du_i` transported along `path`
/// from `u0` to `u1`; column `k` starts as the basis vector `e_k`.
pub fn transport_basis(
    u0: &ChamberPoint,
    u1: &ChamberPoint,
    path: &PathInU,
    s: &ExponentVector,
    tol: f64,
) -> Result<CMatrix> {
    let n = u0.n();
    s.check_len(n)?;
    if u1.n() != n || path.dim() != n {
        return Err(Error::Dimension("path, endpoints and exponents must share n".into()));
    }
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if !close(path.start(), u0.as_slice()) || !close(path.end(), u1.as_slice()) {
        return Err(Error::Dimension("path endpoints do not match u0 and u1".into()));
    }
    for w in path.waypoints() {
        ChamberPoint::new(w.clone())?;
    }
    let dim = n + 1;
    let mut y0 = vec![Complex64::new(0.0, 0.0); dim * dim];
    for k in 0..dim {
        y0[k * dim + k] = re(1.0);
    }
    let field = |point: &[f64], tangent: &[f64], y: &[Complex64]| -> Vec<Complex64> {
        let at = ChamberPoint::new_unchecked(point.to_vec());
        let mut gen = CMatrix::zeros(dim, dim);
        for (i, &t) in tangent.iter().enumerate() {
            if t != 0.0 {
                let m = connection_matrix(&at, s, i).expect("path checked against chamber");
                gen += m * re(t);
            }
        }
        // Column-major state: y[col * dim + row].
        let ym = CMatrix::from_column_slice(dim, dim, y);
        (gen * ym).as_slice().to_vec()
    };
    let y = ode_transport(field, path, &y0, tol)?;
    Ok(CMatrix::from_column_slice(dim, dim, &y))
}

/// Transports a single coefficient vector; convenience over [`transport_basis`].
pub fn transport_phi(
    phi: &Poly,
    u0: &ChamberPoint,
    u1: &ChamberPoint,
    path: &PathInU,
    s: &ExponentVector,
    tol: f64,
) -> Result<Poly> {
    let fundamental = transport_basis(u0, u1, path, s, tol)?;
    let v = nalgebra::DVector::from_iterator(u0.n() + 1, (0..=u0.n()).map(|k| phi.coeff(k)));
    Ok(Poly::new((fundamental * v).iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u2() -> ChamberPoint {
        ChamberPoint::new(vec![2.0, 3.0]).unwrap()
    }

    #[test]
    fn unit_tail_family_gives_analytic_derivative() {
        let u = ChamberPoint::new(vec![1.7, 2.4, 4.1]).unwrap();
        let s = ExponentVector::new(vec![0.3, -1.2, 1.0, 1.0, 1.0]);
        let phi = Poly::from_roots(&u.as_slice().iter().map(|&x| re(x)).collect::<Vec<_>>());
        for i in 0..3 {
            let got = apply_connection(&u, &s, i, &phi).unwrap();
            let others: Vec<Complex64> =
                (0..3).filter(|&j| j != i).map(|j| re(u.get(j))).collect();
            let want = -&Poly::from_roots(&others);
            let diff = &got - &want;
            assert!(diff.max_abs() < 1e-12, "i = {i}: {diff:?}");
        }
    }

    #[test]
    fn phi_vanishing_at_ui_reduces_to_division() {
        let u = u2();
        let s = ExponentVector::new(vec![0.4, 1.3, -0.7, 0.9]);
        // phi = (zeta - 2)(zeta + 0.5), vanishes at u_1 = 2.
        let phi = Poly::from_roots(&[re(2.0), re(-0.5)]);
        let got = apply_connection(&u, &s, 0, &phi).unwrap();
        let (q, _) = poly_div_linear(&phi, re(2.0));
        let want = q.scale(re(-s.get(2))).padded(3);
        assert!((&got - &want).max_abs() < 1e-14);
    }

    #[test]
    fn interpolation_mode_matches_exact_mode() {
        let u = u2();
        let s = ExponentVector::new(vec![0.5, 0.5, 1.0, 1.0]);
        for i in 0..2 {
            let exact = connection_matrix(&u, &s, i).unwrap();
            let interp = connection_matrix_with(
                &u,
                &s,
                i,
                ConnectionMode::Interpolation(InterpNodes::default()),
            )
            .unwrap();
            assert!(max_abs(&(&exact - &interp)) < 1e-12);
        }
    }

    #[test]
    fn index_out_of_range() {
        let s = ExponentVector::new(vec![0.0; 4]);
        assert_eq!(
            connection_matrix(&u2(), &s, 2).unwrap_err(),
            Error::IndexOutOfRange { index: 2, n: 2 }
        );
    }

    #[test]
    fn diagonal_curvature_is_zero() {
        let s = ExponentVector::new(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(zero_curvature_residual(&u2(), &s, 1, 1, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn stencil_leaving_chamber_is_rejected() {
        let u = ChamberPoint::new(vec![1.0 + 1e-6, 3.0]).unwrap();
        let s = ExponentVector::new(vec![0.1, 0.2, 0.3, 0.4]);
        assert!(matches!(
            zero_curvature_residual(&u, &s, 0, 1, 1e-5),
            Err(Error::ChamberViolation(_))
        ));
    }

    #[test]
    fn trivial_path_gives_identity() {
        let u = u2();
        let s = ExponentVector::new(vec![0.1, 0.2, 0.3, 0.4]);
        let path = PathInU::new(vec![u.as_slice().to_vec()]).unwrap();
        let f = transport_basis(&u, &u, &path, &s, 1e-10).unwrap();
        assert_eq!(f, CMatrix::identity(3, 3));
    }
}

