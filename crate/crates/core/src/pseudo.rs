//! Non-parametric pseudopotential of the rational family: the `q`-flow, the
//! derivative fields of `f` and `g`, extraction of `A, B`, and the
//! compatibility residual of `Psi_t = f(Psi_y, u)`, `Psi_x = g(Psi_y, u)`.

use num_complex::Complex64;

use crate::assembly::{self, bilinear_polys, BilinearPolys, SolutionTriple, RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::polyode::{fd_derivative, ode_transport, PathInU, Poly};
use crate::rational::{apply_connection, power_product, Branch, ChamberPoint, ExponentVector};

/// Evaluation point of the pseudopotential fields.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    pub q: Complex64,
    pub u: ChamberPoint,
    pub s: ExponentVector,
    pub branch: Branch,
    pub sign: FieldSign,
}

/// Overall sign of the `u`-derivatives of `f` and `g`.
///
/// With [`FieldSign::Reversed`] (`f_{u_i} = -mu_i W / phi`, `g_{u_i} = nu_i W / phi`)
/// the mixed partials against the `q`-flow come out with opposite signs; the
/// default flips both, which restores involution and leaves the extracted
/// coefficients unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldSign {
    #[default]
    Involutive,
    Reversed,
}

impl FieldSign {
    fn factor(self) -> f64 {
        match self {
            FieldSign::Involutive => 1.0,
            FieldSign::Reversed => -1.0,
        }
    }
}

impl QState {
    /// Validates that `q` avoids `{0, 1, u_1..u_n}` and, in real mode, exceeds `u_n`.
    pub fn new(q: Complex64, u: ChamberPoint, s: ExponentVector, branch: Branch) -> Result<Self> {
        if s.len() != u.n() + 2 {
            return Err(Error::Dimension(format!("{} exponents for n = {}", s.len(), u.n())));
        }
        if u.roots().iter().any(|r| (q - r).norm() < 1e-12) {
            return Err(Error::SingularSample(format!("q = {q}")));
        }
        if branch == Branch::Real {
            let top = u.get(u.n() - 1);
            if q.im != 0.0 || q.re <= top {
                return Err(Error::BranchCut(format!("real mode needs real q > {top}, got {q}")));
            }
        }
        Ok(QState {
            q,
            u,
            s,
            branch,
            sign: FieldSign::default(),
        })
    }

    pub fn with_sign(mut self, sign: FieldSign) -> Self {
        self.sign = sign;
        self
    }

    fn at(&self, q: Complex64, u: ChamberPoint) -> QState {
        QState {
            q,
            u,
            s: self.s.clone(),
            branch: self.branch,
            sign: self.sign,
        }
    }
}

fn phi_at(alpha: &Poly, q: Complex64) -> Result<Complex64> {
    let value = alpha.eval(q);
    let scale = alpha.max_abs() * q.norm().max(1.0).powi(alpha.len().saturating_sub(1) as i32);
    if value.norm() <= 1e-13 * scale {
        return Err(Error::MovableSingularity(value.norm()));
    }
    Ok(value)
}

/// `q(zeta) (zeta - 1) prod_{j != i}(q - u_j) / D_i` evaluated at `q`.
fn product_at(u: &ChamberPoint, i: usize, q: Complex64) -> Complex64 {
    let mut p = q * (q - 1.0);
    for j in 0..u.n() {
        if j != i {
            p *= q - u.get(j);
        }
    }
    p / u.denominator(i)
}

/// Right-hand sides of the `q`-flow: `q_xi = prod base^s / phi(q)` and
/// `q_{u_i} = phi(u_i) / phi(q) * P_i(q)`.
pub fn q_flow_field(state: &QState, alpha: &Poly) -> Result<(Complex64, Vec<Complex64>)> {
    let u = &state.u;
    let phi_q = phi_at(alpha, state.q)?;
    let weight = power_product(u, &state.s, state.q, state.branch, |sk| sk)?;
    let q_xi = weight / phi_q;
    let q_u = (0..u.n())
        .map(|i| alpha.eval(Complex64::new(u.get(i), 0.0)) / phi_q * product_at(u, i, state.q))
        .collect();
    Ok((q_xi, q_u))
}

/// First derivatives of `f` and `g` at a point of the `q`-flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoJet {
    pub f_xi: Complex64,
    pub g_xi: Complex64,
    pub f_u: Vec<Complex64>,
    pub g_u: Vec<Complex64>,
    /// `theta_i(q) / phi(q) * W(q)` up to the field sign, the value `f_xi g_{u_i} - g_xi f_{u_i}` must take.
    pub cross_expected: Vec<Complex64>,
}

impl PseudoJet {
    /// `f_xi g_{u_i} - g_xi f_{u_i}`.
    pub fn cross(&self, i: usize) -> Complex64 {
        self.f_xi * self.g_u[i] - self.g_xi * self.f_u[i]
    }

    /// Largest relative mismatch of the cross identity over all components.
    pub fn cross_identity_residual(&self) -> f64 {
        (0..self.f_u.len())
            .map(|i| {
                let a = self.f_xi * self.g_u[i];
                let b = self.g_xi * self.f_u[i];
                let c = self.cross_expected[i];
                let scale = a.norm().max(b.norm()).max(c.norm());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b - c).norm() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Tolerance of the cross-identity postcondition.
pub const CROSS_IDENTITY_TOL: f64 = 1e-10;

/// `f_xi = phi_1/phi`, `g_xi = phi_2/phi`, `f_{u_i} = mu_i W / phi`,
/// `g_{u_i} = -nu_i W / phi` with `W = prod base^{1 - s}` computed once
/// (both signs reversed under [`FieldSign::Reversed`]).
pub fn fg_derivatives(state: &QState, triple: &SolutionTriple) -> Result<PseudoJet> {
    let bp = bilinear_polys(&state.u, triple)?;
    let jet = fg_from_bilinears(state, triple, &bp)?;
    let r = jet.cross_identity_residual();
    if !(r < CROSS_IDENTITY_TOL) {
        return Err(Error::SingularSample(format!(
            "cross identity residual {r:.3e} at q = {}",
            state.q
        )));
    }
    Ok(jet)
}

fn fg_from_bilinears(state: &QState, triple: &SolutionTriple, bp: &BilinearPolys) -> Result<PseudoJet> {
    let q = state.q;
    let phi_q = phi_at(&triple.alpha, q)?;
    let w = power_product(&state.u, &state.s, q, state.branch, |sk| 1.0 - sk)? / phi_q * state.sign.factor();
    let n = state.u.n();
    Ok(PseudoJet {
        f_xi: triple.beta.eval(q) / phi_q,
        g_xi: triple.gamma.eval(q) / phi_q,
        f_u: (0..n).map(|i| bp.mu[i].eval(q) * w).collect(),
        g_u: (0..n).map(|i| -bp.nu[i].eval(q) * w).collect(),
        cross_expected: (0..n).map(|i| bp.theta[i].eval(q) * w).collect(),
    })
}

/// Jets at each sample `q` for a fixed `(u, s)` and triple.
pub fn jets_at(
    u: &ChamberPoint,
    s: &ExponentVector,
    triple: &SolutionTriple,
    q_samples: &[Complex64],
    branch: Branch,
) -> Result<Vec<PseudoJet>> {
    let bp = bilinear_polys(u, triple)?;
    q_samples
        .iter()
        .map(|&q| fg_from_bilinears(&QState::new(q, u.clone(), s.clone(), branch)?, triple, &bp))
        .collect()
}

/// Matrices of the expansions `f_{u_i} = sum_j a_{ji} g_{u_j}` and
/// `f_xi g_{u_i} - g_xi f_{u_i} = sum_j b_{ji} g_{u_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedAB {
    pub a: CMatrix,
    pub b: CMatrix,
    /// Largest relative residual of the two expansions over the sampled jets,
    /// with `A`, `B` held fixed: zero iff the coefficients do not depend on `q`.
    pub spread: f64,
}

/// extraction from jets at `q_samples` (at least `n`).
pub fn extract_ab(
    u: &ChamberPoint,
    s: &ExponentVector,
    triple: &SolutionTriple,
    q_samples: &[Complex64],
    branch: Branch,
) -> Result<ExtractedAB> {
    extract_ab_from_jets(&jets_at(u, s, triple, q_samples, branch)?)
}

/// Least-squares expansion of `f_u` and the cross terms in the `g_u` over all
/// jets. Each sample carries its own power-product factor, common to its whole
/// row, so rows are equilibrated before solving: the exact solution is
/// unchanged and the spurious ill-conditioning goes away.
pub fn extract_ab_from_jets(jets: &[PseudoJet]) -> Result<ExtractedAB> {
    let n = jets.first().map_or(0, |j| j.f_u.len());
    if n == 0 || jets.len() < n {
        return Err(Error::Dimension(format!("need at least n samples, got {}", jets.len())));
    }
    let m = jets.len();
    let weight: Vec<f64> = jets
        .iter()
        .map(|j| 1.0 / j.g_u.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .collect();
    if weight.iter().any(|w| !w.is_finite()) {
        return Err(Error::SingularSample("g_u vanishes at a sample".into()));
    }
    let g = CMatrix::from_fn(m, n, |r, c| jets[r].g_u[c] * weight[r]);
    let fa = CMatrix::from_fn(m, n, |r, c| jets[r].f_u[c] * weight[r]);
    let fb = CMatrix::from_fn(m, n, |r, c| jets[r].cross(c) * weight[r]);
    let (rank, _) = linalg::numerical_rank(&g, RANK_TOL);
    if rank < n {
        return Err(Error::RankDeficient { expected: n, found: rank });
    }
    let svd = g.svd(true, true);
    let a = svd.solve(&fa, 0.0).map_err(|e| Error::Dimension(e.into()))?;
    let b = svd.solve(&fb, 0.0).map_err(|e| Error::Dimension(e.into()))?;
    let spread = expansion_spread(&a, &b, jets);
    Ok(ExtractedAB { a, b, spread })
}

/// Largest relative residual of both expansions over `jets`, each term scaled
/// by the largest summand so that the measure is a backward error.
pub fn expansion_spread(a: &CMatrix, b: &CMatrix, jets: &[PseudoJet]) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for jet in jets {
        for i in 0..n {
            for (lhs, m) in [(jet.f_u[i], a), (jet.cross(i), b)] {
                let terms: Vec<Complex64> = (0..n).map(|j| m[(j, i)] * jet.g_u[j]).collect();
                let sum: Complex64 = terms.iter().sum();
                let scale = terms.iter().map(|t| t.norm()).fold(lhs.norm(), f64::max);
                if scale > 0.0 {
                    worst = worst.max((lhs - sum).norm() / scale);
                }
            }
        }
    }
    worst
}

/// Residual of `Psi_tx = Psi_xt` with `u_t` taken from the assembled system.
pub fn pseudo_compat_residual(
    u: &ChamberPoint,
    s: &ExponentVector,
    triple: &SolutionTriple,
    ux: &[Complex64],
    uy: &[Complex64],
    q_samples: &[Complex64],
    branch: Branch,
) -> Result<f64> {
    let evo = assembly::evolutionary_form(&assembly::assemble_system(u, triple)?)?;
    let ut = assembly::time_derivative(&evo, ux, uy);
    pseudo_compat_residual_with_ut(u, s, triple, &ut, ux, uy, q_samples, branch)
}

/// As [`pseudo_compat_residual`] with an explicit `u_t`.
#[allow(clippy::too_many_arguments)]
pub fn pseudo_compat_residual_with_ut(
    u: &ChamberPoint,
    s: &ExponentVector,
    triple: &SolutionTriple,
    ut: &[Complex64],
    ux: &[Complex64],
    uy: &[Complex64],
    q_samples: &[Complex64],
    branch: Branch,
) -> Result<f64> {
    let jets = jets_at(u, s, triple, q_samples, branch)?;
    let mut worst: f64 = 0.0;
    for jet in &jets {
        let mut terms = Vec::with_capacity(4 * ux.len());
        for i in 0..ux.len() {
            terms.push(jet.f_xi * uy[i] * jet.g_u[i]);
            terms.push(ux[i] * jet.f_u[i]);
            terms.push(-jet.g_xi * uy[i] * jet.f_u[i]);
            terms.push(-ut[i] * jet.g_u[i]);
        }
        let largest = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        if largest > 0.0 {
            let sum: Complex64 = terms.iter().sum();
            worst = worst.max(sum.norm() / largest);
        }
    }
    Ok(worst)
}

/// `f` and `g` reconstructed along the `xi`-flow from `xi = 0`, where both vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct FgTrace {
    pub xi: Vec<f64>,
    pub q: Vec<Complex64>,
    pub f: Vec<Complex64>,
    pub g: Vec<Complex64>,
}

/// Integrates the `q`-flow to `xi_end` on `steps` uniform intervals and
/// accumulates `f`, `g` by the trapezoid rule.
pub fn reconstruct_fg(state: &QState, triple: &SolutionTriple, xi_end: f64, steps: usize, tol: f64) -> Result<FgTrace> {
    let steps = steps.max(1);
    let h = xi_end / steps as f64;
    let mut trace = FgTrace {
        xi: vec![0.0],
        q: vec![state.q],
        f: vec![Complex64::new(0.0, 0.0)],
        g: vec![Complex64::new(0.0, 0.0)],
    };
    let mut current = state.clone();
    let mut prev = fg_derivatives(&current, triple)?;
    for k in 1..=steps {
        let path = PathInU::segment(vec![0.0], vec![h])?;
        let q_next = flow_q_along_xi(&current, &triple.alpha, &path, tol)?;
        current = QState::new(q_next, current.u.clone(), current.s.clone(), current.branch)?.with_sign(current.sign);
        let next = fg_derivatives(&current, triple)?;
        let f = trace.f[k - 1] + (prev.f_xi + next.f_xi) * (0.5 * h);
        let g = trace.g[k - 1] + (prev.g_xi + next.g_xi) * (0.5 * h);
        trace.xi.push(k as f64 * h);
        trace.q.push(q_next);
        trace.f.push(f);
        trace.g.push(g);
        prev = next;
    }
    Ok(trace)
}

fn flow_q_along_xi(state: &QState, alpha: &Poly, path: &PathInU, tol: f64) -> Result<Complex64> {
    let failure = std::cell::Cell::new(None);
    let field = |_: &[f64], t: &[f64], y: &[Complex64]| -> Vec<Complex64> {
        match q_flow_field(&state.at(y[0], state.u.clone()), alpha) {
            Ok((q_xi, _)) => vec![q_xi * t[0]],
            Err(e) => {
                failure.set(Some(e));
                vec![Complex64::new(f64::NAN, f64::NAN)]
            }
        }
    };
    let out = ode_transport(field, path, &[state.q], tol);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(out?[0])
}

/// Independent variable of the pseudopotential system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowVar {
    Xi,
    U(usize),
}

/// Flow state: `q` and the three coefficient vectors at parameter `u`.
#[derive(Debug, Clone)]
struct FlowPoint {
    q: Complex64,
    u: ChamberPoint,
    triple: SolutionTriple,
}

fn pack(p: &FlowPoint) -> Vec<Complex64> {
    let mut v = vec![p.q];
    for poly in [&p.triple.alpha, &p.triple.beta, &p.triple.gamma] {
        v.extend_from_slice(poly.coeffs());
    }
    v
}

fn unpack(v: &[Complex64], u: ChamberPoint) -> FlowPoint {
    let m = (v.len() - 1) / 3;
    let poly = |k: usize| Poly::new(v[1 + k * m..1 + (k + 1) * m].to_vec());
    FlowPoint {
        q: v[0],
        u,
        triple: SolutionTriple {
            alpha: poly(0),
            beta: poly(1),
            gamma: poly(2),
        },
    }
}

/// `(q_var, f_var, g_var)` at a flow point.
fn derivatives(p: &FlowPoint, template: &QState, var: FlowVar) -> Result<[Complex64; 3]> {
    let state = template.at(p.q, p.u.clone());
    let (q_xi, q_u) = q_flow_field(&state, &p.triple.alpha)?;
    let bp = bilinear_polys(&p.u, &p.triple)?;
    let jet = fg_from_bilinears(&state, &p.triple, &bp)?;
    Ok(match var {
        FlowVar::Xi => [q_xi, jet.f_xi, jet.g_xi],
        FlowVar::U(i) => [q_u[i], jet.f_u[i], jet.g_u[i]],
    })
}

fn flow(base: &FlowPoint, template: &QState, var: FlowVar, dx: f64, tol: f64) -> Result<FlowPoint> {
    if dx == 0.0 {
        return Ok(base.clone());
    }
    let u_at = |x: f64| match var {
        FlowVar::Xi => base.u.clone(),
        FlowVar::U(i) => base.u.with_coord(i, base.u.get(i) + x),
    };
    let end = u_at(dx);
    ChamberPoint::new(end.as_slice().to_vec())?;
    let failure = std::cell::RefCell::new(None);
    let field = |x: &[f64], t: &[f64], y: &[Complex64]| -> Vec<Complex64> {
        let point = unpack(y, u_at(x[0]));
        let step = || -> Result<Vec<Complex64>> {
            let state = template.at(point.q, point.u.clone());
            let (q_xi, q_u) = q_flow_field(&state, &point.triple.alpha)?;
            let mut out = vec![match var {
                FlowVar::Xi => q_xi,
                FlowVar::U(i) => q_u[i],
            }];
            for poly in [&point.triple.alpha, &point.triple.beta, &point.triple.gamma] {
                match var {
                    FlowVar::Xi => out.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(poly.len())),
                    FlowVar::U(i) => out.extend_from_slice(apply_connection(&point.u, &template.s, i, poly)?.coeffs()),
                }
            }
            Ok(out.into_iter().map(|v| v * t[0]).collect())
        };
        match step() {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                vec![Complex64::new(f64::NAN, f64::NAN); y.len()]
            }
        }
    };
    let path = PathInU::segment(vec![0.0], vec![dx])?;
    let y = ode_transport(field, &path, &pack(base), tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(unpack(&y?, end))
}

/// Mixed-partial mismatch `d_b (X_a) - d_a (X_b)` for `X in {q, f, g}`, each
/// relative to the larger of the two sides; returns the largest of the three.
///
/// Derivatives use the fourth-order stencil of step `h` along flows that
/// transport `q` and the solution triple (the latter by the linear system).
pub fn mixed_partial_residual(
    state: &QState,
    triple: &SolutionTriple,
    a: FlowVar,
    b: FlowVar,
    h: f64,
    tol: f64,
) -> Result<f64> {
    let base = FlowPoint {
        q: state.q,
        u: state.u.clone(),
        triple: triple.clone(),
    };
    let along = |var: FlowVar, other: FlowVar| -> Result<Vec<Complex64>> {
        let mut samples = Vec::with_capacity(4);
        for k in [-2.0, -1.0, 1.0, 2.0] {
            let p = flow(&base, state, var, k * h, tol)?;
            samples.push(derivatives(&p, state, other)?.to_vec());
        }
        let lookup = |x: f64| -> Vec<Complex64> {
            let k = (x / h).round() as i32;
            let idx = match k {
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
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let scale = d_b_of_a[k].norm().max(d_a_of_b[k].norm());
        if scale > 0.0 {
            worst = worst.max((d_b_of_a[k] - d_a_of_b[k]).norm() / scale);
        }
    }
    Ok(worst)
}
