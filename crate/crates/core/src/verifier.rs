//! Batch verification runs: configuration, suites, report and plots.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{self, CompatMode};
use crate::elliptic::{self, EllipticTriple, PoleMode, ThetaCtx};
use crate::error::{Error, Result};
use crate::linalg;
use crate::n2;
use crate::polyode::{PathInU, Poly};
use crate::pseudo;
use crate::rational::{self, ExponentVector};
use crate::sampling;

/// Which suites a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rational,
    Elliptic,
    N2Conditions,
    #[default]
    All,
}

/// Largest `n` accepted by either family.
pub const MAX_N: usize = 6;

/// Run configuration, read from JSON or assembled from command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
    /// Per-suite overrides of the default tolerances, keyed by suite name.
    pub tolerances: BTreeMap<String, f64>,
    /// Fixed exponents for the rational suites instead of random draws.
    pub s_exponents: Option<Vec<f64>>,
    /// `[re, im]` of the modular parameter.
    pub tau: Option<[f64; 2]>,
    /// `[re, im]` of the shift.
    pub eta: Option<[f64; 2]>,
    pub output_path: String,
    pub emit_plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::All,
            n: 3,
            seed: 42,
            trials: 3,
            tolerances: BTreeMap::new(),
            s_exponents: None,
            tau: None,
            eta: None,
            output_path: "verify-report.json".into(),
            emit_plots: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let min = if self.mode == Mode::Elliptic { 3 } else { 2 };
        if self.n < min || self.n > MAX_N {
            return Err(Error::Config(format!("n = {} outside [{min}, {MAX_N}] for mode {:?}", self.n, self.mode)));
        }
        if let Some(s) = &self.s_exponents {
            if s.len() != self.n + 2 || s.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("s_exponents needs {} finite values", self.n + 2)));
            }
        }
        for (name, tol) in &self.tolerances {
            if !suite_names(Mode::All).contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown suite in tolerances: {name}")));
            }
            if !(*tol > 0.0) {
                return Err(Error::Config(format!("tolerance for {name} must be positive")));
            }
        }
        self.theta_ctx()?;
        self.eta()?;
        Ok(())
    }

    fn theta_ctx(&self) -> Result<ThetaCtx> {
        let tau = self.tau.map_or(elliptic::DEFAULT_TAU, |[re, im]| Complex64::new(re, im));
        ThetaCtx::new(tau)
    }

    fn eta(&self) -> Result<Complex64> {
        let eta = self.eta.map_or(elliptic::DEFAULT_ETA, |[re, im]| Complex64::new(re, im));
        if self.theta_ctx()?.lattice_distance(eta) < 0.05 {
            return Err(Error::Config(format!("eta = {eta} too close to the lattice")));
        }
        Ok(eta)
    }

    /// Component count of the elliptic suites: `n` itself in elliptic mode,
    /// otherwise `max(n, 4)` so that the family is non-degenerate.
    pub fn elliptic_n(&self) -> usize {
        if self.mode == Mode::Elliptic {
            self.n
        } else {
            self.n.max(4)
        }
    }

    fn tolerance(&self, suite: &Suite) -> f64 {
        self.tolerances.get(suite.name).copied().unwrap_or(suite.tolerance)
    }
}

/// Residual counts per decade: bin `k` holds `10^(k-17) <= r < 10^(k-16)`,
/// bin 0 everything below `1e-16`, bin 18 everything from `10` up (and non-finite values).
pub const HISTOGRAM_BINS: usize = 19;

fn histogram(residuals: &[f64]) -> Vec<u64> {
    let mut bins = vec![0u64; HISTOGRAM_BINS];
    for &r in residuals {
        let k = if !r.is_finite() {
            HISTOGRAM_BINS - 1
        } else if r <= 0.0 {
            0
        } else {
            (r.log10().floor() as i64 + 17).clamp(0, HISTOGRAM_BINS as i64 - 1) as usize
        };
        bins[k] += 1;
    }
    bins
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    /// `None` when any trial failed to evaluate.
    pub max_residual: Option<f64>,
    pub histogram: Vec<u64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub suites: Vec<SuiteRecord>,
    pub verdict: Verdict,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Copy with every timing field zeroed.
    pub fn without_timings(&self) -> Report {
        let mut r = self.clone();
        for s in &mut r.suites {
            s.seconds = 0.0;
        }
        r
    }
}

/// One trial's residual plus optional `(x, y)` points for a scaling plot.
struct TrialOutput {
    residual: f64,
    curve: Option<Vec<(f64, f64)>>,
}

impl From<f64> for TrialOutput {
    fn from(residual: f64) -> Self {
        TrialOutput { residual, curve: None }
    }
}

type TrialFn = fn(&RunConfig, &mut ChaCha8Rng) -> Result<TrialOutput>;

struct Suite {
    name: &'static str,
    mode: Mode,
    tolerance: f64,
    trial: TrialFn,
}

const SUITES: &[Suite] = &[
    Suite { name: "rational/zero-curvature", mode: Mode::Rational, tolerance: 1e-6, trial: zero_curvature },
    Suite { name: "rational/path-independence", mode: Mode::Rational, tolerance: 1e-7, trial: path_independence },
    Suite { name: "rational/connection-action", mode: Mode::Rational, tolerance: 1e-12, trial: connection_action },
    Suite { name: "rational/span", mode: Mode::Rational, tolerance: 0.5, trial: span },
    Suite { name: "rational/compatibility", mode: Mode::Rational, tolerance: 1e-10, trial: rational_compat },
    Suite { name: "rational/extraction", mode: Mode::Rational, tolerance: 1e-8, trial: extraction },
    Suite { name: "rational/perturbation-scaling", mode: Mode::Rational, tolerance: 0.1, trial: rational_scaling },
    Suite { name: "elliptic/theta-laws", mode: Mode::Elliptic, tolerance: 1e-10, trial: theta_laws },
    Suite { name: "elliptic/membership", mode: Mode::Elliptic, tolerance: 1e-9, trial: membership },
    Suite { name: "elliptic/linell", mode: Mode::Elliptic, tolerance: 1e-6, trial: linell },
    Suite { name: "elliptic/frame-change", mode: Mode::Elliptic, tolerance: 1e-8, trial: frame_change },
    Suite { name: "elliptic/translation", mode: Mode::Elliptic, tolerance: 1e-10, trial: translation },
    Suite { name: "elliptic/compatibility", mode: Mode::Elliptic, tolerance: 1e-8, trial: elliptic_compat },
    Suite { name: "elliptic/cross-identity", mode: Mode::Elliptic, tolerance: 1e-9, trial: cross_identity },
    Suite { name: "n2/jet-completion", mode: Mode::N2Conditions, tolerance: 1e-12, trial: jet_completion },
    Suite { name: "n2/relabeling", mode: Mode::N2Conditions, tolerance: 1e-10, trial: relabeling },
    Suite { name: "n2/closure", mode: Mode::N2Conditions, tolerance: 1e-7, trial: closure },
    Suite { name: "n2/perturbation", mode: Mode::N2Conditions, tolerance: 0.15, trial: n2_scaling },
];

/// Names of the suites a mode runs, in report order.
pub fn suite_names(mode: Mode) -> Vec<&'static str> {
    selected(mode).map(|s| s.name).collect()
}

fn selected(mode: Mode) -> impl Iterator<Item = &'static Suite> {
    let mut v: Vec<&Suite> = SUITES.iter().filter(|s| mode == Mode::All || s.mode == mode).collect();
    v.sort_by_key(|s| s.name);
    v.into_iter()
}

/// Stream id of a suite: FNV-1a of its name, so suites draw independently of
/// which others run.
fn stream_id(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Scaling curve of one suite, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub suite: String,
    pub points: Vec<(f64, f64)>,
}

/// Runs every suite selected by the configuration.
pub fn run(config: &RunConfig) -> Result<Report> {
    Ok(run_with_curves(config)?.0)
}

/// As [`run`], also returning the scaling curves of the first trial of each scaling suite.
pub fn run_with_curves(config: &RunConfig) -> Result<(Report, Vec<Curve>)> {
    config.validate()?;
    let mut suites = Vec::new();
    let mut curves = Vec::new();
    for suite in selected(config.mode) {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream_id(suite.name));
        let tol = config.tolerance(suite);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            (0..config.trials)
                .map(|_| (suite.trial)(config, &mut rng))
                .collect::<Vec<_>>()
        }));
        let mut residuals = Vec::with_capacity(config.trials);
        let mut failed = false;
        let mut curve = None;
        match outcome {
            Ok(results) => {
                for r in results {
                    match r {
                        Ok(out) => {
                            if curve.is_none() {
                                curve = out.curve;
                            }
                            residuals.push(out.residual);
                        }
                        Err(_) => {
                            failed = true;
                            residuals.push(f64::INFINITY);
                        }
                    }
                }
            }
            Err(_) => {
                failed = true;
                residuals = vec![f64::INFINITY; config.trials];
            }
        }
        let passed = residuals.iter().filter(|r| **r < tol).count();
        let max_residual = if failed || residuals.iter().any(|r| !r.is_finite()) {
            None
        } else {
            Some(residuals.iter().copied().fold(0.0, f64::max))
        };
        if let Some(points) = curve {
            curves.push(Curve {
                suite: suite.name.to_string(),
                points,
            });
        }
        suites.push(SuiteRecord {
            name: suite.name.to_string(),
            trials: config.trials,
            passed,
            max_residual,
            histogram: histogram(&residuals),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let all_pass = suites.iter().all(|s| {
        let tol = SUITES.iter().find(|x| x.name == s.name).map_or(0.0, |x| config.tolerance(x));
        s.max_residual.is_some_and(|m| m < tol)
    });
    let report = Report {
        config: config.clone(),
        suites,
        verdict: if all_pass { Verdict::Pass } else { Verdict::Fail },
    };
    Ok((report, curves))
}

/// Writes `<stem>-<suite>.svg` next to `output` for each curve; returns the paths.
pub fn write_plots(output: &Path, curves: &[Curve]) -> std::io::Result<Vec<PathBuf>> {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let dir = output.parent().unwrap_or_else(|| Path::new(""));
    let mut paths = Vec::new();
    for c in curves {
        let path = dir.join(format!("{stem}-{}.svg", c.suite.replace('/', "-")));
        std::fs::write(&path, loglog_svg(&c.suite, &c.points))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Standalone SVG of `log10 y` against `log10 x` with a unit-slope guide.
pub fn loglog_svg(title: &str, points: &[(f64, f64)]) -> String {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let (w, h, pad) = (480.0, 360.0, 50.0);
    let bounds = |sel: fn(&(f64, f64)) -> f64| {
        let lo = logs.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = logs.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo.floor(), hi.ceil())
        } else {
            (-1.0, 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n\
         <line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">log10 perturbation</text>\n\
         <text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">log10 residual</text>\n",
        w / 2.0,
        h - pad,
        w - pad,
        h - pad,
        h - pad,
        w / 2.0,
        h - 12.0,
        h / 2.0,
        h / 2.0,
    );
    if let Some(&(lx, ly)) = logs.first() {
        svg += &format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
            sx(x0),
            sy(ly - (lx - x0)),
            sx(x1),
            sy(ly + (x1 - lx))
        );
        let path: Vec<String> = logs.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        svg += &format!("<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n", path.join(" "));
        for (x, y) in &logs {
            svg += &format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n", sx(*x), sy(*y));
        }
    }
    svg += "</svg>\n";
    svg
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.log10(), y.log10())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Rational suites

fn exponents_for(cfg: &RunConfig, rng: &mut ChaCha8Rng, n: usize) -> ExponentVector {
    match &cfg.s_exponents {
        Some(s) => ExponentVector::new(s.clone()),
        None => sampling::exponents(rng, n),
    }
}

fn zero_curvature(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let u = sampling::chamber_point(rng, cfg.n);
    let s = exponents_for(cfg, rng, cfg.n);
    let mut worst: f64 = 0.0;
    for i in 0..cfg.n {
        for j in i + 1..cfg.n {
            worst = worst.max(rational::zero_curvature_residual(&u, &s, i, j, 1e-5)?);
        }
    }
    Ok(worst.into())
}

/// Straight segment versus a detour through a displaced midpoint.
fn path_independence(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.n;
    let u0 = sampling::chamber_point(rng, n);
    let u1 = sampling::chamber_point(rng, n);
    let s = exponents_for(cfg, rng, n);
    let mid: Vec<f64> = loop {
        let m: Vec<f64> = (0..n)
            .map(|k| 0.5 * (u0.get(k) + u1.get(k)) + rng.gen_range(-0.1..0.1))
            .collect();
        if rational::ChamberPoint::new(m.clone()).is_ok_and(|p| p.min_gap() > 0.05) {
            break m;
        }
    };
    let straight = PathInU::segment(u0.as_slice().to_vec(), u1.as_slice().to_vec())?;
    let detour = PathInU::new(vec![u0.as_slice().to_vec(), mid, u1.as_slice().to_vec()])?;
    let a = rational::transport_basis(&u0, &u1, &straight, &s, 1e-11)?;
    let b = rational::transport_basis(&u0, &u1, &detour, &s, 1e-11)?;
    Ok(linalg::relative_frobenius(&a, &b).into())
}

/// Coefficient mismatch of `M_i phi` against `-prod_{j != i} (zeta - u_j)`,
/// relative to the largest entry of `|M_i| |phi|`: the product cancels by
/// up to ~1e4 when the `u_j` cluster, so this is the rounding-level scale.
fn connection_action(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.n;
    let u = sampling::chamber_point(rng, n);
    let s = ExponentVector::unit_tail(n, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max(connection_action_residual(&u, &s, i)?.0);
    }
    Ok(worst.into())
}

/// `(scaled, target_relative)` residuals of `M_i phi = -prod_{j != i} (zeta - u_j)`
/// for `phi = prod_j (zeta - u_j)`; the first divides by `max |M_i| |phi|`, the
/// second by the largest target coefficient.
pub fn connection_action_residual(u: &rational::ChamberPoint, s: &ExponentVector, i: usize) -> Result<(f64, f64)> {
    let n = u.n();
    let roots: Vec<Complex64> = u.as_slice().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let phi = Poly::from_roots(&roots);
    let others: Vec<Complex64> = roots.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, r)| *r).collect();
    let want = -&Poly::from_roots(&others).padded(n + 1);
    let m = rational::connection_matrix(u, s, i)?;
    let got = Poly::new((&m * nalgebra::DVector::from_column_slice(phi.coeffs())).iter().copied().collect());
    let abs_phi = nalgebra::DVector::from_iterator(n + 1, phi.coeffs().iter().map(|z| z.norm()));
    let scale = (m.map(|z| z.norm()) * abs_phi).max();
    let diff = (&got - &want).max_abs();
    Ok((diff / scale.max(f64::MIN_POSITIVE), diff / want.max_abs().max(1.0)))
}

fn span(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let u = sampling::chamber_point(rng, cfg.n);
    let t = sampling::triple(rng, cfg.n);
    let (rank, _) = assembly::span_check(&assembly::bilinear_polys(&u, &t)?);
    Ok((rank.abs_diff(cfg.n) as f64).into())
}

fn rational_compat(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let u = sampling::chamber_point(rng, cfg.n);
    let t = sampling::triple(rng, cfg.n);
    let ux = sampling::real_vector(rng, cfg.n);
    let uy = sampling::real_vector(rng, cfg.n);
    let zetas = sampling::spectral_samples(rng, &u, 10);
    Ok(assembly::compatibility_residual(&u, &t, &ux, &uy, &zetas)?.into())
}

fn extraction(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.n;
    let u = sampling::chamber_point(rng, n);
    let s = exponents_for(cfg, rng, n);
    let t = sampling::triple(rng, n);
    let qs = sampling::circle_samples(rng, &u, 5);
    let ab = pseudo::extract_ab(&u, &s, &t, &qs, rational::Branch::Principal)?;
    let evo = assembly::evolutionary_form(&assembly::assemble_system(&u, &t)?)?;
    Ok(ab.spread.max(extraction_disagreement(&ab, &evo)).into())
}

/// Entrywise disagreement of the extracted and assembled matrices, relative
/// to `max(1, |A|, |B|)`: both carry forward error proportional to that scale.
pub fn extraction_disagreement(ab: &pseudo::ExtractedAB, evo: &assembly::EvolutionaryForm) -> f64 {
    let scale = linalg::max_abs(&evo.a).max(linalg::max_abs(&evo.b)).max(1.0);
    linalg::max_abs(&(&ab.a - &evo.a)).max(linalg::max_abs(&(&ab.b - &evo.b))) / scale
}

/// Residual of the spectral identity after `u_t += eps e_1`; slope of the log-log fit.
fn rational_scaling(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.n;
    let u = sampling::chamber_point(rng, n);
    let t = sampling::triple(rng, n);
    let ux = sampling::real_vector(rng, n);
    let uy = sampling::real_vector(rng, n);
    let zetas = sampling::spectral_samples(rng, &u, 10);
    let bp = assembly::bilinear_polys(&u, &t)?;
    let evo = assembly::evolutionary_form(&assembly::system_from_bilinears(&bp))?;
    let ut = assembly::time_derivative(&evo, &ux, &uy);
    let mut points = Vec::new();
    for eps in [1e-6, 1e-4, 1e-2] {
        let mut v = ut.clone();
        v[0] += eps;
        points.push((eps, assembly::spectral_residual(&u, &bp, &v, &ux, &uy, &zetas, &CompatMode::Cleared)?));
    }
    Ok(TrialOutput {
        residual: (loglog_slope(&points) - 1.0).abs(),
        curve: Some(points),
    })
}

// ---------------------------------------------------------------------------
// Elliptic suites

fn elliptic_setup(cfg: &RunConfig, rng: &mut ChaCha8Rng, n: usize) -> Result<(ThetaCtx, elliptic::EllipticPoint)> {
    let ctx = cfg.theta_ctx()?;
    let pt = elliptic::sample_point(rng, n, cfg.eta()?, &ctx, 0.15);
    Ok((ctx, pt))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

fn theta_laws(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let ctx = cfg.theta_ctx()?;
    let tau = ctx.tau();
    let mut worst = ctx.theta(Complex64::new(0.0, 0.0)).norm();
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    for _ in 0..50 {
        let z = Complex64::new(rng.gen_range(-0.5..0.5), 0.0) + tau * rng.gen_range(-0.5..0.5);
        let t = ctx.theta(z);
        worst = worst
            .max(rel(ctx.theta(z + 1.0), t))
            .max(rel(ctx.theta(z + tau), -(-two_pi_i * z).exp() * t))
            .max(rel(ctx.theta(-z), -(-two_pi_i * z).exp() * t));
    }
    Ok(worst.into())
}

fn membership(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.elliptic_n();
    let (ctx, pt) = elliptic_setup(cfg, rng, n)?;
    let t = elliptic::sample_triple(rng, n);
    let c1 = pt.sum() - pt.eta();
    let c2 = pt.sum() - 2.0 * pt.eta();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        worst = worst.max(elliptic::theta_space_member(|z| elliptic::psi_basis(z, &pt, &ctx)[k], n, c1, &ctx, None));
        let bl = |z: Complex64| elliptic::elliptic_bilinears(z, &pt, &t, &ctx, PoleMode::RemovableLimit);
        for pick in 0..3 {
            let f = |z: Complex64| {
                bl(z).map_or(Complex64::new(f64::NAN, 0.0), |b| [&b.theta, &b.nu, &b.mu][pick][k])
            };
            worst = worst.max(elliptic::theta_space_member(f, n, c2, &ctx, None));
        }
    }
    Ok(worst.into())
}

fn linell(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.elliptic_n();
    let (ctx, pt) = elliptic_setup(cfg, rng, n)?;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let e: Vec<Complex64> = (0..n).map(|j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect();
        for i in 0..n {
            worst = worst.max(elliptic::linell_residual(&pt, &e, i, 1e-3, &ctx)?);
        }
    }
    Ok(worst.into())
}

/// Kernel of `u_1t = u_3t`, `u_2x = u_1x`, `u_2y = u_3y`.
pub fn frame_change_reference() -> assembly::HydroSystemN {
    let one = Complex64::new(1.0, 0.0);
    let mut sys = assembly::HydroSystemN::zeros(3, 3);
    sys.t[(0, 0)] = one;
    sys.t[(0, 2)] = -one;
    sys.x[(1, 1)] = one;
    sys.x[(1, 0)] = -one;
    sys.y[(2, 1)] = one;
    sys.y[(2, 2)] = -one;
    sys
}

fn frame_change(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let (ctx, pt) = elliptic_setup(cfg, rng, 3)?;
    let sys = elliptic::assemble_exell(&pt, &EllipticTriple::standard(3)?, &ctx)?;
    Ok(linalg::max_principal_angle(&sys.kernel(), &frame_change_reference().kernel()).into())
}

fn translation(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.elliptic_n();
    let (ctx, pt) = elliptic_setup(cfg, rng, n)?;
    let t = elliptic::sample_triple(rng, n);
    // Uniform draws are dyadic and would translate without rounding; dividing
    // by 3 fills the mantissa so the check exercises real floating-point shifts.
    let v = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)) / 3.0;
    let a = elliptic::assemble_exell(&pt, &t, &ctx)?;
    let b = elliptic::assemble_exell(&pt.translated(v, &ctx)?, &t, &ctx)?;
    let scale = [&a.t, &a.x, &a.y].iter().map(|m| linalg::max_abs(m)).fold(0.0, f64::max);
    Ok((a.max_difference(&b) / scale).into())
}

fn elliptic_compat(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.elliptic_n();
    let (ctx, pt) = elliptic_setup(cfg, rng, n)?;
    let t = elliptic::sample_triple(rng, n);
    let kernel = elliptic::assemble_exell(&pt, &t, &ctx)?.kernel();
    let weights = sampling::complex_vector(rng, kernel.ncols());
    let v = kernel * nalgebra::DVector::from_vec(weights);
    let part = |k: usize| v.rows(k * n, n).iter().copied().collect::<Vec<_>>();
    let zetas = elliptic::admissible_zetas(&pt, &ctx, 0.1);
    Ok(elliptic::elliptic_compat_residual(&pt, &t, &part(0), &part(1), &part(2), &zetas, &ctx)?.into())
}

fn cross_identity(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let n = cfg.elliptic_n();
    let (ctx, pt) = elliptic_setup(cfg, rng, n)?;
    let t = elliptic::sample_triple(rng, n);
    let mut worst: f64 = 0.0;
    for q in elliptic::admissible_zetas(&pt, &ctx, 0.1) {
        match elliptic::elliptic_pseudo_fields(q, &pt, &t, &ctx) {
            Ok(jet) => worst = worst.max(jet.cross_residual),
            Err(Error::MovableSingularity(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(worst.into())
}

// ---------------------------------------------------------------------------
// Two-component suites

fn jet_completion(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let jet = n2::sample_integrable_jet(rng);
    Ok(n2::max_abs(&n2::condition_residuals(&jet)).into())
}

fn relabeling(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let jet = n2::sample_integrable_jet(rng);
    Ok(n2::max_abs(&n2::condition_residuals(&jet.relabeled())).into())
}

fn closure(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let jet = n2::sample_integrable_jet(rng);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let gs = n2::sample_g(rng);
        worst = worst.max(n2::max_abs(&n2::closure_residuals(&jet, &gs)?));
    }
    Ok(worst.into())
}

fn n2_scaling(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<TrialOutput> {
    let jet = n2::sample_integrable_jet(rng);
    let gs = n2::sample_g(rng);
    let field = n2::Field::ALL[rng.gen_range(0..6)];
    let entry = rng.gen_range(0..3);
    let mut points = Vec::new();
    for eps in [1e-4, 1e-3, 1e-2] {
        let r = n2::max_abs(&n2::closure_residuals(&jet.perturbed(field, entry, eps), &gs)?);
        points.push((eps, r));
    }
    Ok(TrialOutput {
        residual: (loglog_slope(&points) - 1.0).abs(),
        curve: Some(points),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 1e-20, 1e-16, 5e-9, 0.5, 3.0, 1e5, f64::NAN]);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[8], 1);
        assert_eq!(h[16], 1);
        assert_eq!(h[17], 1);
        assert_eq!(h[18], 2);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-2, 1e-1].iter().map(|&x: &f64| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = RunConfig {
            trials: 0,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_tolerance_key_rejected() {
        let mut cfg = RunConfig::default();
        cfg.tolerances.insert("nope".into(), 1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stream_ids_differ() {
        let ids: std::collections::HashSet<u64> = SUITES.iter().map(|s| stream_id(s.name)).collect();
        assert_eq!(ids.len(), SUITES.len());
    }

    #[test]
    fn mode_selection_counts() {
        assert_eq!(suite_names(Mode::Rational).len(), 7);
        assert_eq!(suite_names(Mode::Elliptic).len(), 7);
        assert_eq!(suite_names(Mode::N2Conditions).len(), 4);
        assert_eq!(suite_names(Mode::All).len(), 18);
    }
}
