//! Elliptic family: systems built from sections of degree-`n` theta spaces.
//!
//! `theta(z) = sum_m (-1)^m exp(2 pi i (m z + m(m-1) tau / 2))` is the odd
//! genus-one theta function with `theta(z + 1) = theta(z)`,
//! `theta(z + tau) = -exp(-2 pi i z) theta(z)` and a simple zero at `z = 0`.
//! `Theta(n, c)` denotes entire functions with
//! `f(z + 1) = f(z)`, `f(z + tau) = (-1)^n exp(-2 pi i (n z - c)) f(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::assembly::HydroSystemN;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::polyode::{fd_derivative, ode_transport, PathInU};

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Largest admissible truncation order.
pub const MAX_TERMS: usize = 40;
/// Default lower bound on `Im tau`.
pub const MIN_IM_TAU: f64 = 0.3;
/// Smallest admissible lattice distance between distinct marked points.
pub const MIN_LATTICE_DISTANCE: f64 = 1e-2;

/// Modular parameter and truncation of the theta series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCtx {
    tau: Complex64,
    terms: usize,
    tol: f64,
}

impl ThetaCtx {
    /// Context with `Im tau >= 0.3` and truncation picked for `tol = 1e-17`.
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.im >= MIN_IM_TAU) {
            return Err(Error::Config(format!("Im tau = {} below {MIN_IM_TAU}", tau.im)));
        }
        Self::with_tol(tau, 1e-17)
    }

    /// Smallest `M` such that the first omitted term, relative to the
    /// unit `m = 0` term, stays below `tol` anywhere in the reduced strip.
    pub fn with_tol(tau: Complex64, tol: f64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(Error::Config(format!("tau = {tau} must lie in the upper half plane")));
        }
        if !(tol > 0.0) {
            return Err(Error::Config(format!("theta tolerance {tol} must be positive")));
        }
        // On |Im z| <= Im(tau)/2, |term_m| <= exp(-pi Im(tau) ((|m| - 1)^2 - 1)).
        let bound = |m: usize| (-PI * tau.im * ((m as f64 - 1.0).powi(2) - 1.0)).exp();
        let terms = (1..=MAX_TERMS + 1)
            .find(|&m| bound(m + 1) < tol)
            .filter(|&m| m <= MAX_TERMS)
            .ok_or(Error::TruncationUnreachable {
                tol,
                max_terms: MAX_TERMS,
            })?;
        Ok(ThetaCtx { tau, terms, tol })
    }

    /// Fixed truncation order `M` (sum over `|m| <= M`).
    pub fn with_terms(tau: Complex64, terms: usize) -> Result<Self> {
        let mut ctx = Self::with_tol(tau, 1.0)?;
        ctx.terms = terms.max(1);
        ctx.tol = f64::NAN;
        Ok(ctx)
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `(theta(z), theta'(z))`.
    pub fn theta_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let k = (z.im / self.tau.im).round();
        let shifted = z - self.tau * k;
        let z0 = shifted - shifted.re.round();
        let (t0, d0) = self.series(z0);
        if k == 0.0 {
            return (t0, d0);
        }
        // theta(w + k tau) = (-1)^k exp(-2 pi i (k w + k (k - 1) tau / 2)) theta(w)
        let sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
        let mult = (-TWO_PI_I * (z0 * k + self.tau * (k * (k - 1.0) / 2.0))).exp() * sign;
        (mult * t0, mult * (d0 - TWO_PI_I * k * t0))
    }

    pub fn theta(&self, z: Complex64) -> Complex64 {
        self.theta_with_derivative(z).0
    }

    pub fn theta_prime(&self, z: Complex64) -> Complex64 {
        self.theta_with_derivative(z).1
    }

    fn series(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        let m_max = self.terms as i64;
        for m in -m_max..=m_max {
            let mf = m as f64;
            let term = (TWO_PI_I * (z * mf + self.tau * (mf * (mf - 1.0) / 2.0))).exp();
            let term = if m % 2 == 0 { term } else { -term };
            value += term;
            deriv += term * TWO_PI_I * mf;
        }
        (value, deriv)
    }

    /// Distance from `z` to the lattice `Z + tau Z`.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        let k0 = (z.im / self.tau.im).round();
        let mut best = f64::INFINITY;
        for dk in -1..=1 {
            let w = z - self.tau * (k0 + dk as f64);
            let m0 = w.re.round();
            for dm in -1..=1 {
                best = best.min((w - (m0 + dm as f64)).norm());
            }
        }
        best
    }

    /// Multiplier `(-1)^n exp(-2 pi i (n z - c))` of `Theta(n, c)` under `z -> z + tau`.
    pub fn multiplier(&self, n: usize, c: Complex64, z: Complex64) -> Complex64 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        (-TWO_PI_I * (z * n as f64 - c)).exp() * sign
    }
}

/// Sample points `a + b tau` with `a, b` on a fixed irrational grid.
pub fn membership_grid(ctx: &ThetaCtx) -> Vec<Complex64> {
    let fracs = [0.137, 0.389, 0.613, 0.871];
    let mut out = Vec::with_capacity(16);
    for (k, &a) in fracs.iter().enumerate() {
        for &b in fracs.iter().skip(k % 2).step_by(2) {
            out.push(Complex64::new(a - 0.5, 0.0) + ctx.tau * (b - 0.5));
        }
    }
    out
}

/// Largest normalized violation of the two quasi-periodicity laws of
/// `Theta(n, c)` over `grid` (defaults to [`membership_grid`]).
pub fn theta_space_member<F>(f: F, n: usize, c: Complex64, ctx: &ThetaCtx, grid: Option<&[Complex64]>) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            default_grid = membership_grid(ctx);
            &default_grid
        }
    };
    let rel = |a: Complex64, b: Complex64| {
        let scale = a.norm().max(b.norm());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).norm() / scale
        }
    };
    grid.iter()
        .map(|&z| {
            let fz = f(z);
            let period = rel(f(z + 1.0), fz);
            let quasi = rel(f(z + ctx.tau), ctx.multiplier(n, c, z) * fz);
            period.max(quasi)
        })
        .fold(0.0, f64::max)
}

/// Marked points `u_1..u_n` and the shift `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticPoint {
    u: Vec<Complex64>,
    eta: Complex64,
}

impl EllipticPoint {
    pub fn new(u: Vec<Complex64>, eta: Complex64, ctx: &ThetaCtx) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::InvalidEllipticPoint("no marked points".into()));
        }
        if u.iter().chain(std::iter::once(&eta)).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidEllipticPoint("non-finite coordinate".into()));
        }
        if ctx.lattice_distance(eta) < MIN_LATTICE_DISTANCE {
            return Err(Error::InvalidEllipticPoint(format!("eta = {eta} is a lattice point")));
        }
        for i in 0..u.len() {
            for j in 0..i {
                if ctx.lattice_distance(u[i] - u[j]) < MIN_LATTICE_DISTANCE {
                    return Err(Error::InvalidEllipticPoint(format!("u_{} and u_{} coincide modulo the lattice", j + 1, i + 1)));
                }
            }
        }
        Ok(EllipticPoint { u, eta })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[Complex64] {
        &self.u
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    pub fn sum(&self) -> Complex64 {
        self.u.iter().sum()
    }

    /// Every `u_i` moved by `v`.
    pub fn translated(&self, v: Complex64, ctx: &ThetaCtx) -> Result<Self> {
        Self::new(self.u.iter().map(|z| z + v).collect(), self.eta, ctx)
    }

    /// `u_i` moved by `delta`.
    pub fn shifted(&self, i: usize, delta: Complex64, ctx: &ThetaCtx) -> Result<Self> {
        let mut u = self.u.clone();
        u[i] += delta;
        Self::new(u, self.eta, ctx).map_err(|e| Error::PoleContact(e.to_string()))
    }

    pub fn with_eta(&self, eta: Complex64, ctx: &ThetaCtx) -> Result<Self> {
        Self::new(self.u.clone(), eta, ctx)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    /// `prod_{j != i} theta(u_i - u_j)`.
    fn node_product(&self, i: usize, ctx: &ThetaCtx) -> Complex64 {
        (0..self.n())
            .filter(|&j| j != i)
            .map(|j| ctx.theta(self.u[i] - self.u[j]))
            .product()
    }
}

/// `psi_i(zeta) = prod_{j != i} theta(zeta - u_j) * theta(zeta - u_i + eta)`.
pub fn psi_basis(zeta: Complex64, pt: &EllipticPoint, ctx: &ThetaCtx) -> Vec<Complex64> {
    psi_basis_with_derivative(zeta, pt, ctx).0
}

/// Basis values and their `zeta`-derivatives.
pub fn psi_basis_with_derivative(zeta: Complex64, pt: &EllipticPoint, ctx: &ThetaCtx) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = pt.n();
    let base: Vec<_> = pt.u.iter().map(|&u| ctx.theta_with_derivative(zeta - u)).collect();
    let shifted: Vec<_> = pt.u.iter().map(|&u| ctx.theta_with_derivative(zeta - u + pt.eta)).collect();
    let mut values = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for i in 0..n {
        let mut factors: Vec<(Complex64, Complex64)> = (0..n).filter(|&j| j != i).map(|j| base[j]).collect();
        factors.push(shifted[i]);
        let value: Complex64 = factors.iter().map(|f| f.0).product();
        let deriv: Complex64 = (0..factors.len())
            .map(|k| {
                factors
                    .iter()
                    .enumerate()
                    .map(|(l, f)| if l == k { f.1 } else { f.0 })
                    .product::<Complex64>()
            })
            .sum();
        values.push(value);
        derivs.push(deriv);
    }
    (values, derivs)
}

/// `sum_k coeff_k psi_k(zeta)`.
pub fn combine(coeff: &[Complex64], zeta: Complex64, pt: &EllipticPoint, ctx: &ThetaCtx) -> Complex64 {
    psi_basis(zeta, pt, ctx).iter().zip(coeff).map(|(p, c)| p * c).sum()
}

/// Spectral samples away from the marked points and from the points `u_i - eta`.
pub fn admissible_zetas(pt: &EllipticPoint, ctx: &ThetaCtx, min_distance: f64) -> Vec<Complex64> {
    let grid = [0.071, 0.223, 0.347, 0.509, 0.683, 0.811, 0.947];
    let mut out = Vec::new();
    for (k, &a) in grid.iter().enumerate() {
        for &b in grid.iter().skip(k % 3).step_by(3) {
            let z = Complex64::new(a - 0.5, 0.0) + ctx.tau * (b - 0.5);
            let clear = pt
                .u
                .iter()
                .all(|&u| ctx.lattice_distance(z - u) >= min_distance && ctx.lattice_distance(z - u + pt.eta) >= min_distance);
            if clear {
                out.push(z);
            }
        }
    }
    out
}

/// Right-hand side of the linear system for `phi = sum coeff_k psi_k` in the
/// direction `u_i`, evaluated at `zeta`.
pub fn linell_rhs(pt: &EllipticPoint, coeff: &[Complex64], i: usize, zeta: Complex64, ctx: &ThetaCtx) -> Result<Complex64> {
    pt.check_index(i)?;
    let ui = pt.u[i];
    let (t0, d0) = ctx.theta_with_derivative(zeta - ui);
    let (te, de) = ctx.theta_with_derivative(zeta - ui + pt.eta);
    if t0.norm() == 0.0 || te.norm() == 0.0 {
        return Err(Error::PoleContact(format!("zeta = {zeta}")));
    }
    let others: Complex64 = (0..pt.n()).filter(|&j| j != i).map(|j| ctx.theta(zeta - pt.u[j])).product();
    let phi_ui = combine(coeff, ui, pt, ctx);
    let phi_z = combine(coeff, zeta, pt, ctx);
    let log0 = d0 / t0;
    Ok(phi_ui * others / pt.node_product(i, ctx) * te / ctx.theta(pt.eta) * (log0 - de / te) - log0 * phi_z)
}

/// Relative mismatch between the finite-difference `u_i`-derivative of
/// `phi = sum coeff_k psi_k` (coefficients held fixed) and the linear
/// system's right-hand side, maximized over the admissible `zeta` grid.
pub fn linell_residual(pt: &EllipticPoint, coeff: &[Complex64], i: usize, h: f64, ctx: &ThetaCtx) -> Result<f64> {
    linell_residual_with_basis(pt, pt, coeff, i, h, ctx)
}

/// As [`linell_residual`] but with the basis built from `basis_pt`, which may
/// differ from `pt` (e.g. in `eta`) to form negative controls.
pub fn linell_residual_with_basis(
    pt: &EllipticPoint,
    basis_pt: &EllipticPoint,
    coeff: &[Complex64],
    i: usize,
    h: f64,
    ctx: &ThetaCtx,
) -> Result<f64> {
    pt.check_index(i)?;
    if coeff.len() != pt.n() || basis_pt.n() != pt.n() {
        return Err(Error::Dimension(format!("{} coefficients for n = {}", coeff.len(), pt.n())));
    }
    let stencil: Vec<EllipticPoint> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|&k| basis_pt.shifted(i, Complex64::new(k * h, 0.0), ctx))
        .collect::<Result<_>>()?;
    let zetas = admissible_zetas(pt, ctx, 0.05);
    let lookup = |x: f64| -> Vec<Complex64> {
        let idx = match (x / h).round() as i32 {
            -2 => 0,
            -1 => 1,
            1 => 2,
            _ => 3,
        };
        zetas.iter().map(|&z| combine(coeff, z, &stencil[idx], ctx)).collect()
    };
    let fd: Vec<Complex64> = fd_derivative(lookup, 0.0, h);
    let exact: Vec<Complex64> = zetas
        .iter()
        .map(|&z| linell_rhs(pt, coeff, i, z, ctx))
        .collect::<Result<_>>()?;
    let scale = fd.iter().chain(&exact).map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(fd.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale)
}

/// Coefficients of `phi, phi_1, phi_2` in the basis `psi_1..psi_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticTriple {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub gamma: Vec<Complex64>,
}

impl EllipticTriple {
    /// Requires equal lengths `n >= 3` and a rank-3 coefficient stack.
    pub fn new(alpha: Vec<Complex64>, beta: Vec<Complex64>, gamma: Vec<Complex64>) -> Result<Self> {
        let n = alpha.len();
        if beta.len() != n || gamma.len() != n {
            return Err(Error::Dimension("coefficient vectors of unequal length".into()));
        }
        if n < 3 {
            return Err(Error::Dimension(format!("three independent solutions need n >= 3, got {n}")));
        }
        let t = EllipticTriple { alpha, beta, gamma };
        let rank = linalg::numerical_rank(&t.stack(), 1e-10).0;
        if rank < 3 {
            return Err(Error::RankDeficient { expected: 3, found: rank });
        }
        Ok(t)
    }

    /// The standard-basis triple `(e_1, e_2, e_3)`.
    pub fn standard(n: usize) -> Result<Self> {
        let e = |k: usize| (0..n).map(|j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect();
        Self::new(e(0), e(1), e(2))
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Rows `alpha, beta, gamma`.
    pub fn stack(&self) -> CMatrix {
        let n = self.alpha.len();
        CMatrix::from_fn(3, n, |r, c| [&self.alpha, &self.beta, &self.gamma][r][c])
    }

    /// Triple with rows replaced by `g * [alpha; beta; gamma]`.
    pub fn transformed(&self, g: &CMatrix) -> Result<Self> {
        let m = g * self.stack();
        let row = |r: usize| m.row(r).iter().copied().collect();
        Self::new(row(0), row(1), row(2))
    }
}

/// Values of the elliptic bilinears at one `zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticBilinears {
    pub theta: Vec<Complex64>,
    pub nu: Vec<Complex64>,
    pub mu: Vec<Complex64>,
}

/// Evaluation near the removable points `zeta = u_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoleMode {
    /// Refuse samples within `1e-8` of a marked point.
    #[default]
    Strict,
    /// Use the limit value when `zeta` coincides with a marked point.
    RemovableLimit,
}

const COINCIDENCE: f64 = 1e-8;

/// `theta_i, nu_i, mu_i` at `zeta` with
/// `w_i = theta(zeta - u_i + eta) / (theta(eta) theta(zeta - u_i) prod_{j != i} theta(u_i - u_j))` and
/// `theta_i = w_i (phi_2(u_i) phi_1 - phi_1(u_i) phi_2)`,
/// `nu_i = w_i (phi(u_i) phi_2 - phi_2(u_i) phi)`,
/// `mu_i = w_i (phi_1(u_i) phi - phi(u_i) phi_1)`.
pub fn elliptic_bilinears(
    zeta: Complex64,
    pt: &EllipticPoint,
    triple: &EllipticTriple,
    ctx: &ThetaCtx,
    mode: PoleMode,
) -> Result<EllipticBilinears> {
    let n = pt.n();
    if triple.n() != n {
        return Err(Error::Dimension(format!("triple of length {} for n = {n}", triple.n())));
    }
    let (psi, dpsi) = psi_basis_with_derivative(zeta, pt, ctx);
    let dot = |c: &[Complex64], v: &[Complex64]| -> Complex64 { c.iter().zip(v).map(|(a, b)| a * b).sum() };
    let at_zeta = [dot(&triple.alpha, &psi), dot(&triple.beta, &psi), dot(&triple.gamma, &psi)];
    let d_at_zeta = [dot(&triple.alpha, &dpsi), dot(&triple.beta, &dpsi), dot(&triple.gamma, &dpsi)];
    let theta_eta = ctx.theta(pt.eta);
    let theta_prime_zero = ctx.theta_prime(Complex64::new(0.0, 0.0));

    let mut out = EllipticBilinears {
        theta: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
    };
    for i in 0..n {
        let ui = pt.u[i];
        let psi_ui = psi_basis(ui, pt, ctx);
        let at_ui = [dot(&triple.alpha, &psi_ui), dot(&triple.beta, &psi_ui), dot(&triple.gamma, &psi_ui)];
        // Bilinear combination `x(u_i) y(zeta) - y(u_i) x(zeta)` and its zeta-derivative.
        let pair = |x: usize, y: usize, values: &[Complex64; 3]| at_ui[x] * values[y] - at_ui[y] * values[x];
        let node = pt.node_product(i, ctx);
        let coincident = ctx.lattice_distance(zeta - ui) < COINCIDENCE;
        let weight = |values: &[Complex64; 3], x: usize, y: usize| -> Result<Complex64> {
            if coincident {
                match mode {
                    PoleMode::Strict => Err(Error::PoleContact(format!("zeta = {zeta} meets u_{}", i + 1))),
                    // theta(zeta - u_i) ~ theta'(0) (zeta - u_i) near the node.
                    PoleMode::RemovableLimit => Ok(pair(x, y, &d_at_zeta) / (theta_prime_zero * node)),
                }
            } else {
                let w = ctx.theta(zeta - ui + pt.eta) / (theta_eta * ctx.theta(zeta - ui) * node);
                Ok(w * pair(x, y, values))
            }
        };
        out.theta.push(weight(&at_zeta, 2, 1)?);
        out.nu.push(weight(&at_zeta, 0, 2)?);
        out.mu.push(weight(&at_zeta, 1, 0)?);
    }
    Ok(out)
}

/// `theta(u_j - u_i + eta) / theta(u_j - u_i)`.
pub fn exell_coefficient(pt: &EllipticPoint, i: usize, j: usize, ctx: &ThetaCtx) -> Result<Complex64> {
    let d = pt.u[j] - pt.u[i];
    let den = ctx.theta(d);
    if ctx.lattice_distance(d) < MIN_LATTICE_DISTANCE || den.norm() == 0.0 {
        return Err(Error::PoleContact(format!("u_{} - u_{} on the lattice", j + 1, i + 1)));
    }
    Ok(ctx.theta(d + pt.eta) / den)
}

/// Equation `j`:
/// `sum_{i != j} c_ij [(g_i a_j - g_j a_i)(u_it - u_jt) + (a_i b_j - a_j b_i)(u_ix - u_jx)
///  + (b_i g_j - b_j g_i)(u_iy - u_jy)] = 0` with the differences expanded.
pub fn assemble_exell(pt: &EllipticPoint, triple: &EllipticTriple, ctx: &ThetaCtx) -> Result<HydroSystemN> {
    let n = pt.n();
    if n < 3 || triple.n() != n {
        return Err(Error::Dimension(format!("n = {n} with a triple of length {}", triple.n())));
    }
    let (a, b, g) = (&triple.alpha, &triple.beta, &triple.gamma);
    let mut sys = HydroSystemN::zeros(n, n);
    for j in 0..n {
        for i in (0..n).filter(|&i| i != j) {
            let c = exell_coefficient(pt, i, j, ctx)?;
            let wt = c * (g[i] * a[j] - g[j] * a[i]);
            let wx = c * (a[i] * b[j] - a[j] * b[i]);
            let wy = c * (b[i] * g[j] - b[j] * g[i]);
            for (block, w) in [(&mut sys.t, wt), (&mut sys.x, wx), (&mut sys.y, wy)] {
                block[(j, i)] += w;
                block[(j, j)] -= w;
            }
        }
    }
    Ok(sys)
}

/// `sum_i nu_i(zeta) u_it + mu_i(zeta) u_ix + theta_i(zeta) u_iy` at each
/// sample, relative to its largest term; returns the maximum.
pub fn elliptic_compat_residual(
    pt: &EllipticPoint,
    triple: &EllipticTriple,
    ut: &[Complex64],
    ux: &[Complex64],
    uy: &[Complex64],
    zetas: &[Complex64],
    ctx: &ThetaCtx,
) -> Result<f64> {
    let n = pt.n();
    if ut.len() != n || ux.len() != n || uy.len() != n {
        return Err(Error::Dimension("derivative vectors must have n entries".into()));
    }
    let mut worst: f64 = 0.0;
    for &z in zetas {
        let bl = elliptic_bilinears(z, pt, triple, ctx, PoleMode::Strict)?;
        let terms: Vec<Complex64> = (0..n)
            .flat_map(|i| [bl.nu[i] * ut[i], bl.mu[i] * ux[i], bl.theta[i] * uy[i]])
            .collect();
        let largest = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        if largest > 0.0 {
            worst = worst.max(terms.iter().sum::<Complex64>().norm() / largest);
        }
    }
    Ok(worst)
}

/// Flow and field derivatives of the elliptic pseudopotential at `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticPseudoJet {
    pub q_xi: Complex64,
    pub q_u: Vec<Complex64>,
    pub f_xi: Complex64,
    pub g_xi: Complex64,
    pub f_u: Vec<Complex64>,
    pub g_u: Vec<Complex64>,
    /// Largest relative mismatch of `f_xi g_{u_i} - g_xi f_{u_i} = -theta_i(q) / phi(q)`.
    pub cross_residual: f64,
}

/// `q_xi = prod theta(q - u_j) / phi(q)`,
/// `q_{u_i} = phi(u_i)/phi(q) * prod_{j != i} theta(q - u_j) / prod_{j != i} theta(u_i - u_j) * theta(q - u_i + eta) / theta(eta)`,
/// `f_xi = phi_1/phi`, `g_xi = phi_2/phi`, `f_{u_i} = -mu_i/phi`, `g_{u_i} = nu_i/phi`.
pub fn elliptic_pseudo_fields(
    q: Complex64,
    pt: &EllipticPoint,
    triple: &EllipticTriple,
    ctx: &ThetaCtx,
) -> Result<EllipticPseudoJet> {
    let n = pt.n();
    if pt.u.iter().any(|&u| ctx.lattice_distance(q - u) < COINCIDENCE) {
        return Err(Error::SingularSample(format!("q = {q}")));
    }
    let psi = psi_basis(q, pt, ctx);
    let dot = |c: &[Complex64]| -> Complex64 { c.iter().zip(&psi).map(|(a, b)| a * b).sum() };
    let (phi, phi1, phi2) = (dot(&triple.alpha), dot(&triple.beta), dot(&triple.gamma));
    let scale = psi.iter().zip(&triple.alpha).map(|(p, a)| (p * a).norm()).fold(0.0, f64::max);
    if phi.norm() <= 1e-13 * scale || phi.norm() == 0.0 {
        return Err(Error::MovableSingularity(phi.norm()));
    }
    let thetas: Vec<Complex64> = pt.u.iter().map(|&u| ctx.theta(q - u)).collect();
    let theta_eta = ctx.theta(pt.eta);
    let q_xi = thetas.iter().product::<Complex64>() / phi;
    let q_u = (0..n)
        .map(|i| {
            let others: Complex64 = (0..n).filter(|&j| j != i).map(|j| thetas[j]).product();
            let phi_ui = combine(&triple.alpha, pt.u[i], pt, ctx);
            phi_ui / phi * others / pt.node_product(i, ctx) * ctx.theta(q - pt.u[i] + pt.eta) / theta_eta
        })
        .collect();
    let bl = elliptic_bilinears(q, pt, triple, ctx, PoleMode::Strict)?;
    let f_xi = phi1 / phi;
    let g_xi = phi2 / phi;
    let f_u: Vec<Complex64> = bl.mu.iter().map(|m| -m / phi).collect();
    let g_u: Vec<Complex64> = bl.nu.iter().map(|v| v / phi).collect();
    let cross_residual = (0..n)
        .map(|i| {
            let a = f_xi * g_u[i];
            let b = g_xi * f_u[i];
            let c = -bl.theta[i] / phi;
            let s = a.norm().max(b.norm()).max(c.norm());
            if s == 0.0 {
                0.0
            } else {
                (a - b - c).norm() / s
            }
        })
        .fold(0.0, f64::max);
    Ok(EllipticPseudoJet {
        q_xi,
        q_u,
        f_xi,
        g_xi,
        f_u,
        g_u,
        cross_residual,
    })
}

/// Independent variable of the elliptic pseudopotential system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipticVar {
    Xi,
    /// Real direction of the complex coordinate `u_i`.
    U(usize),
}

fn flow_q(q0: Complex64, pt: &EllipticPoint, triple: &EllipticTriple, var: EllipticVar, dx: f64, ctx: &ThetaCtx, tol: f64) -> Result<(Complex64, EllipticPoint)> {
    let point_at = |x: f64| -> Result<EllipticPoint> {
        match var {
            EllipticVar::Xi => Ok(pt.clone()),
            EllipticVar::U(i) => pt.shifted(i, Complex64::new(x, 0.0), ctx),
        }
    };
    let end = point_at(dx)?;
    if dx == 0.0 {
        return Ok((q0, end));
    }
    let failure = std::cell::RefCell::new(None);
    let field = |x: &[f64], t: &[f64], y: &[Complex64]| -> Vec<Complex64> {
        let step = || -> Result<Complex64> {
            let p = point_at(x[0])?;
            let jet = elliptic_pseudo_fields(y[0], &p, triple, ctx)?;
            Ok(match var {
                EllipticVar::Xi => jet.q_xi,
                EllipticVar::U(i) => jet.q_u[i],
            } * t[0])
        };
        match step() {
            Ok(v) => vec![v],
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                vec![Complex64::new(f64::NAN, f64::NAN)]
            }
        }
    };
    let path = PathInU::segment(vec![0.0], vec![dx])?;
    let out = ode_transport(field, &path, &[q0], tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((out?[0], end))
}

fn var_derivatives(jet: &EllipticPseudoJet, var: EllipticVar) -> Vec<Complex64> {
    match var {
        EllipticVar::Xi => vec![jet.q_xi, jet.f_xi, jet.g_xi],
        EllipticVar::U(i) => vec![jet.q_u[i], jet.f_u[i], jet.g_u[i]],
    }
}

/// Mixed-partial mismatch `d_b (X_a) - d_a (X_b)` for `X in {q, f, g}` with
/// the triple's coefficients constant; each relative to the larger side.
pub fn elliptic_mixed_partial_residual(
    q: Complex64,
    pt: &EllipticPoint,
    triple: &EllipticTriple,
    a: EllipticVar,
    b: EllipticVar,
    h: f64,
    ctx: &ThetaCtx,
    tol: f64,
) -> Result<f64> {
    let along = |var: EllipticVar, other: EllipticVar| -> Result<Vec<Complex64>> {
        let samples: Vec<Vec<Complex64>> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|&k| {
                let (qk, pk) = flow_q(q, pt, triple, var, k * h, ctx, tol)?;
                Ok(var_derivatives(&elliptic_pseudo_fields(qk, &pk, triple, ctx)?, other))
            })
            .collect::<Result<_>>()?;
        let lookup = |x: f64| -> Vec<Complex64> {
            let idx = match (x / h).round() as i32 {
                -2 => 0,
                -1 => 1,
                1 => 2,
                _ => 3,
            };
            samples[idx].clone()
        };
        Ok(fd_derivative(lookup, 0.0, h))
    };
    let d_b_of_a = along(b, a)?;
    let d_a_of_b = along(a, b)?;
    Ok(d_b_of_a
        .iter()
        .zip(&d_a_of_b)
        .map(|(x, y)| {
            let s = x.norm().max(y.norm());
            if s == 0.0 {
                0.0
            } else {
                (x - y).norm() / s
            }
        })
        .fold(0.0, f64::max))
}

/// Default modular parameter.
pub const DEFAULT_TAU: Complex64 = Complex64::new(0.0, 1.0);
/// Default shift.
pub const DEFAULT_ETA: Complex64 = Complex64::new(0.17, 0.11);

/// `n` marked points `a + b tau`, `a, b` uniform in `[0, 1)`, pairwise at
/// lattice distance at least `min_gap` and away from the shift.
pub fn sample_point<R: Rng + ?Sized>(rng: &mut R, n: usize, eta: Complex64, ctx: &ThetaCtx, min_gap: f64) -> EllipticPoint {
    loop {
        let u: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(0.0..1.0), 0.0) + ctx.tau * rng.gen_range(0.0..1.0))
            .collect();
        let separated = (0..n).all(|i| {
            (0..i).all(|j| {
                let d = u[i] - u[j];
                ctx.lattice_distance(d) >= min_gap
                    && ctx.lattice_distance(d + eta) >= min_gap
                    && ctx.lattice_distance(d - eta) >= min_gap
            })
        });
        if separated {
            if let Ok(pt) = EllipticPoint::new(u, eta, ctx) {
                return pt;
            }
        }
    }
}

/// Triple with entries uniform in the unit square, redrawn until rank 3.
pub fn sample_triple<R: Rng + ?Sized>(rng: &mut R, n: usize) -> EllipticTriple {
    let mut draw = || -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    loop {
        if let Ok(t) = EllipticTriple::new(draw(), draw(), draw()) {
            return t;
        }
    }
}
