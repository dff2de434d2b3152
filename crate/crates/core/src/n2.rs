//! Two-component systems
//! `(v, w)_t + diag(a, b) (v, w)_x + [[p, q], [r, s]] (v, w)_y = 0`.
//!
//! The sixteen second-order integrability conditions on `(a, b, p, q, r, s)`
//! are evaluated on pointwise second-order jets. The pseudopotential
//! `psi_t = f(psi_y, v, w)`, `psi_x = g(psi_y, v, w)` prescribes every first
//! derivative of `h1 = g_v`, `h2 = g_w`; the closure residuals are the
//! mismatches of their mixed partials.
//!
//! Total derivatives are taken with forward-mode dual numbers: each formula is
//! written once over [`Scalar`] and evaluated on `f64`, on [`Dual<f64>`] for a
//! single derivation and on `Dual<Dual<f64>>` for two.

use std::ops::{Add, Div, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};

/// Field order used by every array in this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    A = 0,
    B = 1,
    P = 2,
    Q = 3,
    R = 4,
    S = 5,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::A, Field::B, Field::P, Field::Q, Field::R, Field::S];

    /// Image under `a <-> b`, `p <-> s`, `q <-> r`.
    pub fn relabeled(self) -> Field {
        match self {
            Field::A => Field::B,
            Field::B => Field::A,
            Field::P => Field::S,
            Field::S => Field::P,
            Field::Q => Field::R,
            Field::R => Field::Q,
        }
    }
}

/// Derivation direction in the `(v, w)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    V,
    W,
}

/// Value, gradient `(d_v, d_w)` and Hessian `(vv, vw, ww)` of one field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl FieldJet {
    pub fn d(&self, dir: Dir) -> f64 {
        self.grad[dir as usize]
    }

    pub fn dd(&self, first: Dir, second: Dir) -> f64 {
        match (first, second) {
            (Dir::V, Dir::V) => self.hess[0],
            (Dir::W, Dir::W) => self.hess[2],
            _ => self.hess[1],
        }
    }
}

/// Smallest admissible `|a - b|`, `|q|`, `|r|`.
pub const JET_FLOOR: f64 = 1e-6;

/// Second-order jet of the six coefficient fields at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2Fields {
    fields: [FieldJet; 6],
}

impl Jet2Fields {
    pub fn new(fields: [FieldJet; 6]) -> Result<Self> {
        let all_finite = fields
            .iter()
            .all(|f| f.value.is_finite() && f.grad.iter().chain(&f.hess).all(|x| x.is_finite()));
        if !all_finite {
            return Err(Error::InvalidJet("non-finite entry".into()));
        }
        let v = |k: Field| fields[k as usize].value;
        if (v(Field::A) - v(Field::B)).abs() < JET_FLOOR {
            return Err(Error::InvalidJet("a and b coincide".into()));
        }
        if v(Field::Q).abs() < JET_FLOOR || v(Field::R).abs() < JET_FLOOR {
            return Err(Error::InvalidJet("q or r vanishes".into()));
        }
        Ok(Jet2Fields { fields })
    }

    pub fn field(&self, k: Field) -> &FieldJet {
        &self.fields[k as usize]
    }

    pub fn fields(&self) -> &[FieldJet; 6] {
        &self.fields
    }

    /// Copy with one Hessian entry (`0 = vv, 1 = vw, 2 = ww`) shifted by `eps`.
    pub fn perturbed(&self, k: Field, entry: usize, eps: f64) -> Self {
        let mut out = *self;
        out.fields[k as usize].hess[entry] += eps;
        out
    }

    /// Jet of the same system after `v <-> w`, `a <-> b`, `p <-> s`, `q <-> r`.
    pub fn relabeled(&self) -> Self {
        let mut out = [FieldJet::default(); 6];
        for k in Field::ALL {
            let f = self.field(k);
            out[k.relabeled() as usize] = FieldJet {
                value: f.value,
                grad: [f.grad[1], f.grad[0]],
                hess: [f.hess[2], f.hess[1], f.hess[0]],
            };
        }
        Jet2Fields { fields: out }
    }
}

/// First derivatives `(g_v, g_w)` of the pseudopotential at the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GSample {
    pub g_v: f64,
    pub g_w: f64,
}

impl GSample {
    pub fn new(g_v: f64, g_w: f64) -> Result<Self> {
        if g_v == 0.0 || g_w == 0.0 || !g_v.is_finite() || !g_w.is_finite() {
            return Err(Error::VanishingDenominator("g_v g_w"));
        }
        Ok(GSample { g_v, g_w })
    }
}

// ---------------------------------------------------------------------------
// Integrability conditions

/// Condition labels in output order of [`condition_residuals`].
pub const CONDITION_LABELS: [&str; 16] = [
    "a_vv", "a_vw", "a_ww", "b_vv", "b_vw", "b_ww", "p_vv", "p_vw", "p_ww", "s_vv", "s_vw", "s_ww", "qr_ww", "q_vw",
    "r_vw", "qr_vv",
];

/// Index of each condition's image under relabeling.
pub const RELABEL_PERMUTATION: [usize; 16] = [5, 4, 3, 2, 1, 0, 11, 10, 9, 8, 7, 6, 15, 14, 13, 12];

struct Vals {
    a: f64,
    b: f64,
    p: f64,
    q: f64,
    r: f64,
    s: f64,
    av: f64,
    aw: f64,
    bv: f64,
    bw: f64,
    pv: f64,
    pw: f64,
    qv: f64,
    qw: f64,
    rv: f64,
    rw: f64,
    sv: f64,
    sw: f64,
}

impl Vals {
    fn of(jet: &Jet2Fields) -> Self {
        let f = |k: Field| jet.field(k);
        Vals {
            a: f(Field::A).value,
            b: f(Field::B).value,
            p: f(Field::P).value,
            q: f(Field::Q).value,
            r: f(Field::R).value,
            s: f(Field::S).value,
            av: f(Field::A).grad[0],
            aw: f(Field::A).grad[1],
            bv: f(Field::B).grad[0],
            bw: f(Field::B).grad[1],
            pv: f(Field::P).grad[0],
            pw: f(Field::P).grad[1],
            qv: f(Field::Q).grad[0],
            qw: f(Field::Q).grad[1],
            rv: f(Field::R).grad[0],
            rw: f(Field::R).grad[1],
            sv: f(Field::S).grad[0],
            sw: f(Field::S).grad[1],
        }
    }
}

/// Right-hand sides as lists of summands, in [`CONDITION_LABELS`] order.
fn condition_rhs_terms(jet: &Jet2Fields) -> [Vec<f64>; 16] {
    let Vals {
        a,
        b,
        p,
        q,
        r,
        s,
        av,
        aw,
        bv,
        bw,
        pv,
        pw,
        qv,
        qw,
        rv,
        rw,
        sv,
        sw,
    } = Vals::of(jet);
    let amb = a - b;
    let bma = b - a;
    let amb2 = amb * amb;
    [
        vec![
            (q * av * bv + 2.0 * q * av * av + (s - p) * av * aw - r * aw * aw) / (amb * q),
            av * rv / r,
            (2.0 * av * pw - aw * pv) / q,
        ],
        vec![av * (aw + bw) / amb, av * (qw / q + rw / r)],
        vec![
            (q * av * bv + (s - p) * av * bw + r * aw * aw) / (amb * r),
            av * sw / r,
            aw * qw / q,
        ],
        vec![
            (r * aw * bw + (p - s) * av * bw + q * bv * bv) / (bma * q),
            bw * pv / q,
            bv * rv / r,
        ],
        vec![bw * (av + bv) / bma, bw * (qv / q + rv / r)],
        vec![
            (r * aw * bw + 2.0 * r * bw * bw + (p - s) * bv * bw - q * bv * bv) / (bma * r),
            bw * qw / q,
            (2.0 * bw * sv - bv * sw) / r,
        ],
        vec![
            2.0 * (r * (av * bw - aw * bv) + (s - p) * av * bv) / amb2,
            rv * pv / r,
            pv * pw / q,
            (r / q * (2.0 * qv * aw - 2.0 * av * qw + aw * pw) - bv * pv + 2.0 * rv * aw
                - 2.0 * av * (sv + pv + rw)
                + (p - s) / q * (2.0 * pv * aw - av * pw))
                / bma,
        ],
        vec![
            2.0 * (s - p) * av * bw / amb2,
            -(bw * pv + (2.0 * sw + pw) * av) / bma,
            pv * (qw / q + rw / r),
        ],
        vec![
            2.0 * (q * (aw * bv - av * bw) + (s - p) * aw * bw) / amb2,
            ((p - s) * bw * pv - q * bv * pv - 2.0 * r * sw * aw - r * aw * pw) / (bma * r),
            pv * sw / r,
            qw * pw / q,
        ],
        vec![
            2.0 * (r * (aw * bv - av * bw) + (p - s) * av * bv) / amb2,
            ((s - p) * av * sw - r * aw * sw - 2.0 * q * pv * bv - q * bv * sv) / (amb * q),
            pv * sw / q,
            rv * sv / r,
        ],
        vec![
            2.0 * (p - s) * av * bw / amb2,
            -(av * sw + (2.0 * pv + sv) * bw) / amb,
            sw * (qv / q + rv / r),
        ],
        vec![
            2.0 * (q * (av * bw - aw * bv) + (p - s) * aw * bw) / amb2,
            qw * sw / q,
            sv * sw / r,
            (q / r * (2.0 * rw * bv - 2.0 * bw * rv + bv * sv) - aw * sw + 2.0 * qw * bv
                - 2.0 * bw * (pw + sw + qv)
                + (s - p) / r * (2.0 * sw * bv - bw * sv))
                / amb,
        ],
        vec![
            2.0 * (p - s) * ((p - s) * aw * bw + q * (av * bw - aw * bv)) / amb2,
            q * rv / r * (q * bv + (s - p) * bw) / amb,
            (s - p) * (2.0 * aw * sw + 2.0 * bw * pw + bw * qv) / amb,
            r * (aw - 2.0 * bw) * qw / amb,
            q * (aw * rw + bv * (2.0 * pw + 2.0 * sw + qv) - 2.0 * bw * (rw + pv + sv)) / amb,
            r / q * qw * qw,
            q / r * sw * rv,
            -qw * rw,
            sw * (2.0 * pw + qv),
        ],
        vec![
            (s - p) * (q * av * bv + (s - p) * av * bw + r * aw * bw) / (r * amb2),
            qv * qw / q,
            pv * sw / r,
            (av * (r * qw + q * rw) + (s - p) * (av * sw + bw * pv) + r * aw * sw + q * pv * bv) / (r * amb),
        ],
        vec![
            (p - s) * (r * aw * bw + (p - s) * av * bw + q * av * bv) / (q * amb2),
            rv * rw / r,
            pv * sw / q,
            (bw * (r * qv + q * rv) + (p - s) * (av * sw + bw * pv) + r * aw * sw + q * pv * bv) / (q * bma),
        ],
        vec![
            2.0 * (s - p) * ((s - p) * av * bv + r * (av * bw - aw * bv)) / amb2,
            r * qw / q * (r * aw + (p - s) * av) / bma,
            (p - s) * (2.0 * bv * pv + 2.0 * av * sv + av * rw) / bma,
            q * (bv - 2.0 * av) * rv / bma,
            r * (bv * qv + aw * (2.0 * sv + 2.0 * pv + rw) - 2.0 * av * (qv + sw + pw)) / bma,
            q / r * rv * rv,
            r / q * pv * qw,
            -rv * qv,
            pv * (2.0 * sv + rw),
        ],
    ]
}

fn condition_lhs(jet: &Jet2Fields) -> [f64; 16] {
    let h = |k: Field, i: usize| jet.field(k).hess[i];
    let (q, r) = (jet.field(Field::Q).value, jet.field(Field::R).value);
    [
        h(Field::A, 0),
        h(Field::A, 1),
        h(Field::A, 2),
        h(Field::B, 0),
        h(Field::B, 1),
        h(Field::B, 2),
        h(Field::P, 0),
        h(Field::P, 1),
        h(Field::P, 2),
        h(Field::S, 0),
        h(Field::S, 1),
        h(Field::S, 2),
        q * h(Field::R, 2) + r * h(Field::Q, 2),
        h(Field::Q, 1),
        h(Field::R, 1),
        q * h(Field::R, 0) + r * h(Field::Q, 0),
    ]
}

/// `(LHS - RHS) / scale` for each condition, where `scale` is the largest
/// absolute summand of the right-hand side (or `|LHS|` if that is larger).
pub fn condition_residuals(jet: &Jet2Fields) -> [f64; 16] {
    let lhs = condition_lhs(jet);
    let rhs = condition_rhs_terms(jet);
    let mut out = [0.0; 16];
    for k in 0..16 {
        let sum: f64 = rhs[k].iter().sum();
        let scale = rhs[k].iter().fold(lhs[k].abs(), |m, t| m.max(t.abs()));
        out[k] = if scale == 0.0 { 0.0 } else { (lhs[k] - sum) / scale };
    }
    out
}

/// Fills the Hessians so that every condition holds, with `q_vv` and `q_ww`
/// left free.
pub fn complete_integrable_jet(
    values: [f64; 6],
    gradients: [[f64; 2]; 6],
    free_q_vv: f64,
    free_q_ww: f64,
) -> Result<Jet2Fields> {
    let mut fields = [FieldJet::default(); 6];
    for k in 0..6 {
        fields[k].value = values[k];
        fields[k].grad = gradients[k];
    }
    fields[Field::Q as usize].hess[0] = free_q_vv;
    fields[Field::Q as usize].hess[2] = free_q_ww;
    let mut jet = Jet2Fields::new(fields)?;
    let rhs: Vec<f64> = condition_rhs_terms(&jet).iter().map(|t| t.iter().sum()).collect();
    let (q, r) = (values[Field::Q as usize], values[Field::R as usize]);
    let f = &mut jet.fields;
    for (k, field) in [Field::A, Field::B, Field::P, Field::S].into_iter().enumerate() {
        f[field as usize].hess = [rhs[3 * k], rhs[3 * k + 1], rhs[3 * k + 2]];
    }
    f[Field::Q as usize].hess[1] = rhs[13];
    f[Field::R as usize].hess[1] = rhs[14];
    f[Field::R as usize].hess[2] = (rhs[12] - r * free_q_ww) / q;
    f[Field::R as usize].hess[0] = (rhs[15] - r * free_q_vv) / q;
    Ok(jet)
}

/// Bounds for random jets: values in `[1, 2]` with `|a - b| >= 0.5`,
/// `q, r` in `[0.5, 1.5]`, gradients and free entries in `[-1, 1]`.
pub fn sample_integrable_jet<R: Rng + ?Sized>(rng: &mut R) -> Jet2Fields {
    let a = rng.gen_range(1.0..2.0);
    let b = loop {
        let b: f64 = rng.gen_range(1.0..2.0);
        if (a - b).abs() >= 0.5 {
            break b;
        }
    };
    let values = [
        a,
        b,
        rng.gen_range(1.0..2.0),
        rng.gen_range(0.5..1.5),
        rng.gen_range(0.5..1.5),
        rng.gen_range(1.0..2.0),
    ];
    let mut grads = [[0.0; 2]; 6];
    for g in grads.iter_mut() {
        *g = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    }
    complete_integrable_jet(values, grads, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        .expect("sampling bounds keep the jet admissible")
}

/// `g_v, g_w` of either sign with magnitudes in `[0.2, 2]`.
pub fn sample_g<R: Rng + ?Sized>(rng: &mut R) -> GSample {
    let mut draw = || {
        let m: f64 = rng.gen_range(0.2..2.0);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    };
    GSample::new(draw(), draw()).expect("nonzero by construction")
}

// ---------------------------------------------------------------------------
// Scalar arithmetic

/// Field operations needed by the pseudopotential formulas.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
}

/// `re + eps * du` with `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub du: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, du: S) -> Self {
        Dual { re, du }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let re = self.re / o.re;
        Dual::new(re, (self.du - re * o.du) / o.re)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(x: f64) -> Self {
        Dual::new(S::cst(x), S::cst(0.0))
    }
}

/// Field values and first derivatives as scalars of type `S`.
#[derive(Debug, Clone, Copy)]
pub struct Syms<S> {
    pub val: [S; 6],
    pub dv: [S; 6],
    pub dw: [S; 6],
}

impl<S: Scalar> Syms<S> {
    fn d(&self, dir: Dir) -> [S; 6] {
        match dir {
            Dir::V => self.dv,
            Dir::W => self.dw,
        }
    }
}

impl Syms<f64> {
    pub fn of(jet: &Jet2Fields) -> Self {
        let pick = |g: &dyn Fn(&FieldJet) -> f64| {
            let mut out = [0.0; 6];
            for (o, f) in out.iter_mut().zip(jet.fields()) {
                *o = g(f);
            }
            out
        };
        Syms {
            val: pick(&|f| f.value),
            dv: pick(&|f| f.grad[0]),
            dw: pick(&|f| f.grad[1]),
        }
    }

    /// Lift along `dir`, carrying the total derivative in the dual part.
    fn seeded(jet: &Jet2Fields, dir: Dir) -> Syms<Dual<f64>> {
        let base = Syms::of(jet);
        let mut out = Syms {
            val: [Dual::cst(0.0); 6],
            dv: [Dual::cst(0.0); 6],
            dw: [Dual::cst(0.0); 6],
        };
        for (k, f) in jet.fields().iter().enumerate() {
            out.val[k] = Dual::new(base.val[k], f.d(dir));
            out.dv[k] = Dual::new(base.dv[k], f.dd(Dir::V, dir));
            out.dw[k] = Dual::new(base.dw[k], f.dd(Dir::W, dir));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Pseudopotential derivative chain

/// `g_xi` from the field values and `h1 = g_v`, `h2 = g_w`.
pub fn g_xi_expr<S: Scalar>(val: &[S; 6], h1: S, h2: S) -> S {
    let [a, b, p, q, r, s] = *val;
    (s + q * h1 / h2 - p - r * h2 / h1) / (a - b)
}

/// `f_xi` from the field values and `h1`, `h2`.
pub fn f_xi_expr<S: Scalar>(val: &[S; 6], h1: S, h2: S) -> S {
    let [a, b, p, q, r, s] = *val;
    (b * (p + r * h2 / h1) - a * (s + q * h1 / h2)) / (a - b)
}

pub fn g_vw_expr<S: Scalar>(f: &Syms<S>, h1: S, h2: S) -> S {
    let [a, b, ..] = f.val;
    let aw = f.dw[0];
    let bv = f.dv[1];
    aw * h1 / (b - a) + bv * h2 / (a - b)
}

pub fn g_vv_expr<S: Scalar>(f: &Syms<S>, h1: S, h2: S) -> S {
    let [a, b, p, q, r, s] = f.val;
    let [av, bv, pv, _, rv, _] = f.dv;
    let aw = f.dw[0];
    let bracket = h2 * h2 * (r * (bv - av) + (a - b) * rv)
        + h1 * h2 * ((a - b) * pv + (s - p) * av - r * aw)
        + q * av * h1 * h1;
    h1 * bracket / ((a - b) * r * h2 * h2)
}

pub fn g_ww_expr<S: Scalar>(f: &Syms<S>, h1: S, h2: S) -> S {
    let [a, b, p, q, r, s] = f.val;
    let [aw, bw, _, qw, _, sw] = f.dw;
    let bv = f.dv[1];
    let bracket = h1 * h1 * (q * (aw - bw) + (b - a) * qw)
        + h1 * h2 * ((b - a) * sw + (p - s) * bw - q * bv)
        + r * bw * h2 * h2;
    h2 * bracket / ((b - a) * q * h1 * h1)
}

/// Prescribed `D_dir h_k` (`k = 0` for `g_v`, `1` for `g_w`).
fn h_derivative<S: Scalar>(f: &Syms<S>, h1: S, h2: S, k: usize, dir: Dir) -> S {
    match (k, dir) {
        (0, Dir::V) => g_vv_expr(f, h1, h2),
        (1, Dir::W) => g_ww_expr(f, h1, h2),
        _ => g_vw_expr(f, h1, h2),
    }
}

/// `D_dir g_xi` as an expression in fields, their first derivatives and `h`.
fn g_xi_total<S: Scalar>(f: &Syms<S>, h1: S, h2: S, dir: Dir) -> S {
    let d = f.d(dir);
    let mut val = [Dual::cst(0.0); 6];
    for k in 0..6 {
        val[k] = Dual::new(f.val[k], d[k]);
    }
    let h1d = Dual::new(h1, h_derivative(f, h1, h2, 0, dir));
    let h2d = Dual::new(h2, h_derivative(f, h1, h2, 1, dir));
    g_xi_expr(&val, h1d, h2d).du
}

/// Evaluated derivative chain at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GChain {
    pub f_v: f64,
    pub f_w: f64,
    pub f_xi: f64,
    pub g_xi: f64,
    pub g_vv: f64,
    pub g_vw: f64,
    pub g_ww: f64,
}

fn check_denominators(jet: &Jet2Fields, gs: &GSample) -> Result<()> {
    let v = |k: Field| jet.field(k).value;
    if v(Field::A) == v(Field::B) {
        return Err(Error::VanishingDenominator("a - b"));
    }
    if v(Field::Q) == 0.0 {
        return Err(Error::VanishingDenominator("q"));
    }
    if v(Field::R) == 0.0 {
        return Err(Error::VanishingDenominator("r"));
    }
    if gs.g_v == 0.0 {
        return Err(Error::VanishingDenominator("g_v"));
    }
    if gs.g_w == 0.0 {
        return Err(Error::VanishingDenominator("g_w"));
    }
    Ok(())
}

pub fn g_chain(jet: &Jet2Fields, gs: &GSample) -> Result<GChain> {
    check_denominators(jet, gs)?;
    let f = Syms::of(jet);
    let (h1, h2) = (gs.g_v, gs.g_w);
    Ok(GChain {
        f_v: -f.val[0] * h1,
        f_w: -f.val[1] * h2,
        f_xi: f_xi_expr(&f.val, h1, h2),
        g_xi: g_xi_expr(&f.val, h1, h2),
        g_vv: g_vv_expr(&f, h1, h2),
        g_vw: g_vw_expr(&f, h1, h2),
        g_ww: g_ww_expr(&f, h1, h2),
    })
}

/// Labels of [`closure_residuals`], in order.
pub const CLOSURE_LABELS: [&str; 6] = ["vw/g_v", "vw/g_w", "v-xi/g_v", "v-xi/g_w", "w-xi/g_v", "w-xi/g_w"];

fn normalized(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y) / scale
    }
}

/// Mixed-partial mismatches of `h1 = g_v`, `h2 = g_w` with all first
/// derivatives prescribed, each relative to the larger side.
pub fn closure_residuals(jet: &Jet2Fields, gs: &GSample) -> Result<[f64; 6]> {
    check_denominators(jet, gs)?;
    let (h1, h2) = (gs.g_v, gs.g_w);
    let base = Syms::of(jet);

    // Lifts `h` along `dir` with its prescribed derivative.
    let lift_h = |dir: Dir| {
        (
            Dual::new(h1, h_derivative(&base, h1, h2, 0, dir)),
            Dual::new(h2, h_derivative(&base, h1, h2, 1, dir)),
        )
    };
    // `D_outer` of the prescribed `D_inner h_k`.
    let d_of_h = |k: usize, inner: Dir, outer: Dir| {
        let f = Syms::seeded(jet, outer);
        let (a, b) = lift_h(outer);
        h_derivative(&f, a, b, k, inner).du
    };
    // `D_outer D_inner g_xi`.
    let dd_gxi = |inner: Dir, outer: Dir| {
        let f = Syms::seeded(jet, outer);
        let (a, b) = lift_h(outer);
        g_xi_total(&f, a, b, inner).du
    };
    let x = [g_xi_total(&base, h1, h2, Dir::V), g_xi_total(&base, h1, h2, Dir::W)];
    // `D_xi` of the prescribed `D_inner h_k`; fields are constant in `xi`.
    let xi_of_h = |k: usize, inner: Dir| {
        let val = base.val.map(|v| Dual::new(v, 0.0));
        let f = Syms {
            val,
            dv: base.dv.map(|v| Dual::new(v, 0.0)),
            dw: base.dw.map(|v| Dual::new(v, 0.0)),
        };
        h_derivative(&f, Dual::new(h1, x[0]), Dual::new(h2, x[1]), k, inner).du
    };

    let mut out = [0.0; 6];
    for k in 0..2 {
        out[k] = normalized(d_of_h(k, Dir::V, Dir::W), d_of_h(k, Dir::W, Dir::V));
        let dir_k = if k == 0 { Dir::V } else { Dir::W };
        out[2 + k] = normalized(xi_of_h(k, Dir::V), dd_gxi(dir_k, Dir::V));
        out[4 + k] = normalized(xi_of_h(k, Dir::W), dd_gxi(dir_k, Dir::W));
    }
    Ok(out)
}

/// Largest absolute entry.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}
