//! Bilinear polynomials of a solution triple, the quasilinear system obtained
//! by matching powers of the spectral parameter, and its evolutionary form.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::polyode::{poly_div_linear, Poly};
use crate::rational::{power_product, Branch, ChamberPoint, ExponentVector};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

/// Three coefficient vectors `(phi, phi_1, phi_2)` at a common parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTriple {
    pub alpha: Poly,
    pub beta: Poly,
    pub gamma: Poly,
}

impl SolutionTriple {
    pub fn new(alpha: Poly, beta: Poly, gamma: Poly) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.len() != gamma.len() || alpha.is_empty() {
            return Err(Error::Dimension(format!(
                "triple lengths differ: {}, {}, {}",
                alpha.len(),
                beta.len(),
                gamma.len()
            )));
        }
        Ok(SolutionTriple { alpha, beta, gamma })
    }

    /// Number of coefficients, `n + 1`.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Rank of the 3 x (n+1) coefficient stack at [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        let m = CMatrix::from_fn(3, self.len(), |r, c| match r {
            0 => self.alpha.coeff(c),
            1 => self.beta.coeff(c),
            _ => self.gamma.coeff(c),
        });
        linalg::numerical_rank(&m, RANK_TOL).0
    }

    pub fn is_independent(&self) -> bool {
        self.rank() == 3
    }

    /// `(phi, phi_1, phi_2) -> g (phi, phi_1, phi_2)` for a 3x3 matrix `g`.
    pub fn transformed(&self, g: &CMatrix) -> SolutionTriple {
        let parts = [&self.alpha, &self.beta, &self.gamma];
        let mix = |r: usize| {
            (0..3).fold(Poly::zeros(self.len()), |acc, c| &acc + &parts[c].scale(g[(r, c)]))
        };
        SolutionTriple {
            alpha: mix(0),
            beta: mix(1),
            gamma: mix(2),
        }
    }

    pub fn swap_beta_gamma(&self) -> SolutionTriple {
        SolutionTriple {
            alpha: self.alpha.clone(),
            beta: self.gamma.clone(),
            gamma: self.beta.clone(),
        }
    }
}

/// `theta_i, nu_i, mu_i` for every component, each of degree at most `n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearPolys {
    pub theta: Vec<Poly>,
    pub nu: Vec<Poly>,
    pub mu: Vec<Poly>,
}

fn bilinear_quotient(a: &Poly, b: &Poly, ui: Complex64, scale: Complex64) -> Poly {
    // (a(u_i) b(zeta) - b(u_i) a(zeta)) / (zeta - u_i)
    let numerator = &b.scale(a.eval(ui)) - &a.scale(b.eval(ui));
    let (q, _) = poly_div_linear(&numerator, ui);
    q.scale(scale)
}

pub fn bilinear_polys(u: &ChamberPoint, triple: &SolutionTriple) -> Result<BilinearPolys> {
    let n = u.n();
    if triple.len() != n + 1 {
        return Err(Error::Dimension(format!(
            "triple has {} coefficients, expected {}",
            triple.len(),
            n + 1
        )));
    }
    let (phi, phi1, phi2) = (&triple.alpha, &triple.beta, &triple.gamma);
    let mut out = BilinearPolys {
        theta: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
    };
    for i in 0..n {
        let ui = Complex64::new(u.get(i), 0.0);
        let scale = Complex64::new(1.0 / u.denominator(i), 0.0);
        out.theta.push(bilinear_quotient(phi1, phi2, ui, scale));
        out.nu.push(bilinear_quotient(phi2, phi, ui, scale));
        out.mu.push(bilinear_quotient(phi, phi1, ui, scale));
    }
    Ok(out)
}

/// Derivative direction of a quasilinear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    T,
    X,
    Y,
}

/// `T_t u_t + T_x u_x + T_y u_y = 0`, one row per equation, one column per component.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroSystemN {
    pub t: CMatrix,
    pub x: CMatrix,
    pub y: CMatrix,
}

impl HydroSystemN {
    pub fn zeros(equations: usize, components: usize) -> Self {
        HydroSystemN {
            t: CMatrix::zeros(equations, components),
            x: CMatrix::zeros(equations, components),
            y: CMatrix::zeros(equations, components),
        }
    }

    pub fn equations(&self) -> usize {
        self.t.nrows()
    }

    pub fn components(&self) -> usize {
        self.t.ncols()
    }

    pub fn block(&self, d: Direction) -> &CMatrix {
        match d {
            Direction::T => &self.t,
            Direction::X => &self.x,
            Direction::Y => &self.y,
        }
    }

    /// `[T_t | T_x | T_y]`, acting on `(u_t, u_x, u_y)` stacked.
    pub fn stacked(&self) -> CMatrix {
        let (m, n) = (self.equations(), self.components());
        let mut out = CMatrix::zeros(m, 3 * n);
        out.view_mut((0, 0), (m, n)).copy_from(&self.t);
        out.view_mut((0, n), (m, n)).copy_from(&self.x);
        out.view_mut((0, 2 * n), (m, n)).copy_from(&self.y);
        out
    }

    pub fn apply(&self, ut: &[Complex64], ux: &[Complex64], uy: &[Complex64]) -> DVector<Complex64> {
        let v = |s: &[Complex64]| DVector::from_column_slice(s);
        &self.t * v(ut) + &self.x * v(ux) + &self.y * v(uy)
    }

    /// Copy with every equation scaled to unit max-norm.
    pub fn row_normalized(&self) -> HydroSystemN {
        let mut out = self.clone();
        for r in 0..self.equations() {
            let norm = [&self.t, &self.x, &self.y]
                .iter()
                .flat_map(|b| b.row(r).iter().map(|v| v.norm()).collect::<Vec<_>>())
                .fold(0.0, f64::max);
            if norm > 0.0 {
                let inv = Complex64::new(1.0 / norm, 0.0);
                for b in [&mut out.t, &mut out.x, &mut out.y] {
                    let scaled = b.row(r) * inv;
                    b.set_row(r, &scaled);
                }
            }
        }
        out
    }

    /// Multiplies equation `r` by `factors[r]`.
    pub fn rows_scaled(&self, factors: &[Complex64]) -> HydroSystemN {
        let mut out = self.clone();
        for (r, &f) in factors.iter().enumerate() {
            for b in [&mut out.t, &mut out.x, &mut out.y] {
                let scaled = b.row(r) * f;
                b.set_row(r, &scaled);
            }
        }
        out
    }

    /// Orthonormal basis of the solution space in `(u_t, u_x, u_y)` coordinates.
    pub fn kernel(&self) -> CMatrix {
        linalg::nullspace(&self.row_normalized().stacked(), RANK_TOL)
    }

    pub fn rank(&self) -> usize {
        linalg::numerical_rank(&self.row_normalized().stacked(), RANK_TOL).0
    }

    /// Max absolute difference of all coefficients.
    pub fn max_difference(&self, other: &HydroSystemN) -> f64 {
        [
            (&self.t, &other.t),
            (&self.x, &other.x),
            (&self.y, &other.y),
        ]
        .iter()
        .map(|(a, b)| linalg::max_abs(&(*a - *b)))
        .fold(0.0, f64::max)
    }
}

/// Equation `l` collects the coefficient of `zeta^l` in
/// `sum_i nu_i u_{i,t} + mu_i u_{i,x} + theta_i u_{i,y}`.
pub fn assemble_system(u: &ChamberPoint, triple: &SolutionTriple) -> Result<HydroSystemN> {
    let bp = bilinear_polys(u, triple)?;
    Ok(system_from_bilinears(&bp))
}

pub fn system_from_bilinears(bp: &BilinearPolys) -> HydroSystemN {
    let n = bp.nu.len();
    let mut sys = HydroSystemN::zeros(n, n);
    for i in 0..n {
        for l in 0..n {
            sys.t[(l, i)] = bp.nu[i].coeff(l);
            sys.x[(l, i)] = bp.mu[i].coeff(l);
            sys.y[(l, i)] = bp.theta[i].coeff(l);
        }
    }
    sys
}

/// `u_t = A u_x + B u_y` together with the condition number of the t-block.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionaryForm {
    pub a: CMatrix,
    pub b: CMatrix,
    pub condition: f64,
}

/// Condition number above which the t-block counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn evolutionary_form(sys: &HydroSystemN) -> Result<EvolutionaryForm> {
    if sys.equations() != sys.components() {
        return Err(Error::Dimension(format!(
            "{} equations for {} components",
            sys.equations(),
            sys.components()
        )));
    }
    let condition = linalg::condition_number(&sys.t);
    if !(condition < SINGULAR_CONDITION) {
        return Err(Error::SingularTimeBlock { condition });
    }
    let lu = sys.t.clone().lu();
    let a = lu.solve(&(-&sys.x)).ok_or(Error::SingularTimeBlock { condition })?;
    let b = lu.solve(&(-&sys.y)).ok_or(Error::SingularTimeBlock { condition })?;
    Ok(EvolutionaryForm { a, b, condition })
}

/// How the compatibility identity is evaluated at the spectral samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CompatMode {
    /// The polynomial identity itself.
    #[default]
    Cleared,
    /// Each term carries the common factor `zeta^{1-2 s_1} (zeta-1)^{1-2 s_2} prod (zeta-u_i)^{1-2 s_{i+2}}`.
    Uncleared(ExponentVector, Branch),
}

/// Evaluates `sum_i nu_i(zeta) u_{i,t} + mu_i(zeta) u_{i,x} + theta_i(zeta) u_{i,y}` at
/// each sample and returns the largest value relative to the largest single term.
pub fn spectral_residual(
    u: &ChamberPoint,
    bp: &BilinearPolys,
    ut: &[Complex64],
    ux: &[Complex64],
    uy: &[Complex64],
    zetas: &[Complex64],
    mode: &CompatMode,
) -> Result<f64> {
    let roots = u.roots();
    let mut worst: f64 = 0.0;
    for &z in zetas {
        if roots.iter().any(|r| (z - r).norm() < 1e-12) {
            return Err(Error::SingularSample(format!("{z}")));
        }
        let factor = match mode {
            CompatMode::Cleared => Complex64::new(1.0, 0.0),
            CompatMode::Uncleared(s, branch) => power_product(u, s, z, *branch, |sk| 1.0 - 2.0 * sk)?,
        };
        let mut sum = Complex64::new(0.0, 0.0);
        let mut largest: f64 = 0.0;
        for i in 0..u.n() {
            for term in [
                bp.nu[i].eval(z) * ut[i],
                bp.mu[i].eval(z) * ux[i],
                bp.theta[i].eval(z) * uy[i],
            ] {
                let term = term * factor;
                largest = largest.max(term.norm());
                sum += term;
            }
        }
        if largest > 0.0 {
            worst = worst.max(sum.norm() / largest);
        }
    }
    Ok(worst)
}

/// Solves the assembled system for `u_t` given `u_x, u_y`, then checks the
/// spectral identity at `zetas`.
pub fn compatibility_residual(
    u: &ChamberPoint,
    triple: &SolutionTriple,
    ux: &[Complex64],
    uy: &[Complex64],
    zetas: &[Complex64],
) -> Result<f64> {
    compatibility_residual_with(u, triple, ux, uy, zetas, &CompatMode::Cleared)
}

pub fn compatibility_residual_with(
    u: &ChamberPoint,
    triple: &SolutionTriple,
    ux: &[Complex64],
    uy: &[Complex64],
    zetas: &[Complex64],
    mode: &CompatMode,
) -> Result<f64> {
    let bp = bilinear_polys(u, triple)?;
    let evo = evolutionary_form(&system_from_bilinears(&bp))?;
    let ut = time_derivative(&evo, ux, uy);
    spectral_residual(u, &bp, &ut, ux, uy, zetas, mode)
}

/// `u_t = A u_x + B u_y`.
pub fn time_derivative(evo: &EvolutionaryForm, ux: &[Complex64], uy: &[Complex64]) -> Vec<Complex64> {
    let v = |s: &[Complex64]| DVector::from_column_slice(s);
    (&evo.a * v(ux) + &evo.b * v(uy)).iter().copied().collect()
}

/// Numerical rank of the span of all `theta_i, nu_i, mu_i` coefficient vectors.
pub fn span_check(bp: &BilinearPolys) -> (usize, Vec<f64>) {
    let n = bp.nu.len();
    let width = bp
        .theta
        .iter()
        .chain(&bp.nu)
        .chain(&bp.mu)
        .map(Poly::len)
        .max()
        .unwrap_or(0)
        .max(n);
    let all: Vec<&Poly> = bp.theta.iter().chain(&bp.nu).chain(&bp.mu).collect();
    let m = CMatrix::from_fn(all.len(), width, |r, c| all[r].coeff(c));
    linalg::numerical_rank(&m, RANK_TOL)
}

/// Coefficient tensor of the explicit coefficient formula with the equation index shifted:
/// equations indexed `l = 1..n` and weights `u_i^{j+l} / prod_{j != i}(u_i - u_j)`.
pub fn shifted_index_system(u: &ChamberPoint, triple: &SolutionTriple) -> HydroSystemN {
    explicit_system(u, triple, ExplicitVariant::ShiftedIndex)
}

/// Closed-form coefficients of `zeta^l` (`l = 0..n-1`) obtained by expanding the
/// bilinear quotients: weights `u_i^{j+k-1-l} / D_i` over `j <= l < k`.
pub fn expanded_system(u: &ChamberPoint, triple: &SolutionTriple) -> HydroSystemN {
    explicit_system(u, triple, ExplicitVariant::Expanded)
}

#[derive(Clone, Copy)]
enum ExplicitVariant {
    ShiftedIndex,
    Expanded,
}

fn explicit_system(u: &ChamberPoint, triple: &SolutionTriple, variant: ExplicitVariant) -> HydroSystemN {
    let n = u.n();
    let (a, b, g) = (&triple.alpha, &triple.beta, &triple.gamma);
    let mut sys = HydroSystemN::zeros(n, n);
    for row in 0..n {
        let l = match variant {
            ExplicitVariant::ShiftedIndex => row + 1,
            ExplicitVariant::Expanded => row,
        };
        for i in 0..n {
            let ui = u.get(i);
            let denom = match variant {
                ExplicitVariant::ShiftedIndex => (0..n).filter(|&j| j != i).map(|j| ui - u.get(j)).product::<f64>(),
                ExplicitVariant::Expanded => u.denominator(i),
            };
            let mut t = Complex64::new(0.0, 0.0);
            let mut x = Complex64::new(0.0, 0.0);
            let mut y = Complex64::new(0.0, 0.0);
            for j in 0..=l.min(n) {
                for k in (l + 1)..=n {
                    let exponent = match variant {
                        ExplicitVariant::ShiftedIndex => (j + l) as i32,
                        ExplicitVariant::Expanded => (j + k - 1 - l) as i32,
                    };
                    let w = ui.powi(exponent) / denom;
                    t += (g.coeff(j) * a.coeff(k) - g.coeff(k) * a.coeff(j)) * w;
                    x += (a.coeff(j) * b.coeff(k) - a.coeff(k) * b.coeff(j)) * w;
                    y += (b.coeff(j) * g.coeff(k) - b.coeff(k) * g.coeff(j)) * w;
                }
            }
            sys.t[(row, i)] = t;
            sys.x[(row, i)] = x;
            sys.y[(row, i)] = y;
        }
    }
    sys
}

/// Discrepancy between the shifted-index coefficient formula and the system derived
/// from the polynomial identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedFormulaReport {
    /// Largest principal angle between the two solution spaces.
    pub kernel_angle: f64,
    /// Rank of the shifted-index system (its last equation has an empty sum).
    pub shifted_rank: usize,
    /// Largest principal angle between the expanded closed form and the assembled system.
    pub expanded_kernel_angle: f64,
}

pub fn compare_shifted_formula(u: &ChamberPoint, triple: &SolutionTriple) -> Result<ShiftedFormulaReport> {
    let assembled = assemble_system(u, triple)?;
    let shifted = shifted_index_system(u, triple);
    let expanded = expanded_system(u, triple);
    let k = assembled.kernel();
    Ok(ShiftedFormulaReport {
        kernel_angle: linalg::max_principal_angle(&k, &shifted.kernel()),
        shifted_rank: shifted.rank(),
        expanded_kernel_angle: linalg::max_principal_angle(&k, &expanded.kernel()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sample() -> (ChamberPoint, SolutionTriple) {
        let u = ChamberPoint::new(vec![2.0, 3.0]).unwrap();
        let t = SolutionTriple::new(
            Poly::from_real(&[1.0, -2.0, 0.5]),
            Poly::from_real(&[0.3, 1.0, 2.0]),
            Poly::from_real(&[-1.0, 0.25, 1.5]),
        )
        .unwrap();
        (u, t)
    }

    #[test]
    fn equal_phi_and_phi1_kill_mu() {
        let (u, t) = sample();
        let t = SolutionTriple::new(t.alpha.clone(), t.alpha.clone(), t.gamma).unwrap();
        let bp = bilinear_polys(&u, &t).unwrap();
        assert!(bp.mu.iter().all(|p| p.max_abs() == 0.0));
    }

    #[test]
    fn swap_maps_bilinears() {
        let (u, t) = sample();
        let bp = bilinear_polys(&u, &t).unwrap();
        let sw = bilinear_polys(&u, &t.swap_beta_gamma()).unwrap();
        for i in 0..2 {
            assert!((&sw.theta[i] + &bp.theta[i]).max_abs() < 1e-15);
            assert!((&sw.nu[i] + &bp.mu[i]).max_abs() < 1e-15);
            assert!((&sw.mu[i] + &bp.nu[i]).max_abs() < 1e-15);
        }
    }

    #[test]
    fn equal_phi1_phi2_zero_y_block() {
        let (u, t) = sample();
        let t = SolutionTriple::new(t.alpha, t.beta.clone(), t.beta).unwrap();
        let sys = assemble_system(&u, &t).unwrap();
        assert_eq!(linalg::max_abs(&sys.y), 0.0);
    }

    #[test]
    fn evolutionary_form_of_t_only_system() {
        let mut sys = HydroSystemN::zeros(2, 2);
        sys.t = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(3.0)]);
        let evo = evolutionary_form(&sys).unwrap();
        assert_eq!(linalg::max_abs(&evo.a), 0.0);
        assert_eq!(linalg::max_abs(&evo.b), 0.0);
    }

    #[test]
    fn singular_t_block_is_reported() {
        let sys = HydroSystemN::zeros(2, 2);
        assert!(matches!(evolutionary_form(&sys), Err(Error::SingularTimeBlock { .. })));
    }

    #[test]
    fn zero_spatial_derivatives_give_zero_residual() {
        let (u, t) = sample();
        let zeros = vec![c(0.0); 2];
        let r = compatibility_residual(&u, &t, &zeros, &zeros, &[c(4.0), c(5.5)]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn pole_sample_rejected() {
        let (u, t) = sample();
        let v = vec![c(1.0); 2];
        assert!(matches!(
            compatibility_residual(&u, &t, &v, &v, &[c(3.0)]),
            Err(Error::SingularSample(_))
        ));
    }

    #[test]
    fn fully_degenerate_triple_has_rank_zero_span() {
        let (u, t) = sample();
        let t = SolutionTriple::new(t.alpha.clone(), t.alpha.clone(), t.alpha).unwrap();
        assert_eq!(span_check(&bilinear_polys(&u, &t).unwrap()).0, 0);
    }

    #[test]
    fn expanded_closed_form_equals_assembly() {
        let (u, t) = sample();
        let a = assemble_system(&u, &t).unwrap();
        let e = expanded_system(&u, &t);
        assert!(a.max_difference(&e) < 1e-14);
    }
}
