//! Acceptance criteria, one PASS/FAIL line each. Thresholds are pinned here
//! and never read from configuration.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hydropseudo::assembly::{self, CompatMode};
use hydropseudo::elliptic::{self, EllipticTriple, ThetaCtx, DEFAULT_ETA, DEFAULT_TAU};
use hydropseudo::error::Error;
use hydropseudo::linalg;
use hydropseudo::n2;
use hydropseudo::polyode::PathInU;
use hydropseudo::pseudo;
use hydropseudo::rational::{self, Branch, ChamberPoint, ExponentVector};
use hydropseudo::sampling;
use hydropseudo::verifier;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONNECTION_ACTION_TOL: f64 = 1e-12;
const CONNECTION_ACTION_BUDGET: Duration = Duration::from_secs(1);
const ZERO_CURVATURE_TOL: f64 = 1e-6;
const ZERO_CURVATURE_STEP: f64 = 1e-5;
const ZERO_CURVATURE_BUDGET: Duration = Duration::from_secs(10);
const PATH_TOL: f64 = 1e-7;
const PATH_BUDGET: Duration = Duration::from_secs(5);
const COMPAT_TOL: f64 = 1e-10;
const SLOPE_TOL: f64 = 0.1;
const EXTRACTION_SPREAD_TOL: f64 = 1e-8;
const EXTRACTION_AGREE_TOL: f64 = 1e-8;
const CLOSURE_TOL: f64 = 1e-7;
const PERTURB_FACTOR: f64 = 10.0;
const CLOSURE_BUDGET: Duration = Duration::from_secs(20);
const RELABEL_TOL: f64 = 1e-10;
const THETA_TOL: f64 = 1e-10;
const THETA_MAX_TERMS: usize = 40;
const MEMBERSHIP_TOL: f64 = 1e-9;
const LINELL_TOL: f64 = 1e-6;
const FRAME_CHANGE_TOL: f64 = 1e-8;
const TRANSLATION_TOL: f64 = 1e-10;
const ELLIPTIC_COMPAT_TOL: f64 = 1e-8;
const CROSS_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(worst: f64, tol: f64) -> Outcome {
    Outcome {
        pass: worst < tol,
        detail: format!("max {worst:.3e} < {tol:.0e}"),
    }
}

fn timed(budget: Duration, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = body();
    let spent = start.elapsed();
    Outcome {
        pass: out.pass && spent < budget,
        detail: format!("{}; {:.2}s < {}s", out.detail, spent.as_secs_f64(), budget.as_secs()),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn connection_action() -> Outcome {
    timed(CONNECTION_ACTION_BUDGET, || {
        let mut rng = rng(1);
        let (mut worst, mut target_relative): (f64, f64) = (0.0, 0.0);
        for n in 2..=4 {
            for _ in 0..10 {
                let u = sampling::chamber_point(&mut rng, n);
                let s = ExponentVector::unit_tail(n, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                for i in 0..n {
                    let (scaled, rel) = verifier::connection_action_residual(&u, &s, i).unwrap();
                    worst = worst.max(scaled);
                    target_relative = target_relative.max(rel);
                }
            }
        }
        let mut out = within(worst, CONNECTION_ACTION_TOL);
        out.detail = format!("{} (relative to target coefficients {target_relative:.3e})", out.detail);
        out
    })
}

fn zero_curvature() -> Outcome {
    timed(ZERO_CURVATURE_BUDGET, || {
        let mut rng = rng(2);
        let mut worst: f64 = 0.0;
        for n in 2..=4 {
            for _ in 0..20 {
                let u = sampling::chamber_point(&mut rng, n);
                let s = sampling::exponents(&mut rng, n);
                for i in 0..n {
                    for j in i + 1..n {
                        worst = worst.max(rational::zero_curvature_residual(&u, &s, i, j, ZERO_CURVATURE_STEP).unwrap());
                    }
                }
            }
        }
        within(worst, ZERO_CURVATURE_TOL)
    })
}

fn path_independence() -> Outcome {
    timed(PATH_BUDGET, || {
        let cases: [(Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>); 2] = [
            (vec![1.6, 2.5], vec![2.2, 3.9], vec![vec![1.4, 3.3], vec![2.6, 3.1]], vec![0.7, -1.1, 1.4, -0.3]),
            (
                vec![1.5, 2.3, 3.4],
                vec![1.9, 3.1, 4.0],
                vec![vec![1.5, 2.9, 3.5], vec![1.9, 2.9, 3.6]],
                vec![0.4, -0.8, 1.3, -0.5, 0.9],
            ),
        ];
        let mut worst: f64 = 0.0;
        for (a, b, via, s) in cases {
            let u0 = ChamberPoint::new(a.clone()).unwrap();
            let u1 = ChamberPoint::new(b.clone()).unwrap();
            let s = ExponentVector::new(s);
            let straight = PathInU::segment(a.clone(), b.clone()).unwrap();
            let detour = PathInU::new(std::iter::once(a).chain(via).chain(std::iter::once(b)).collect()).unwrap();
            let x = rational::transport_basis(&u0, &u1, &straight, &s, 1e-11).unwrap();
            let y = rational::transport_basis(&u0, &u1, &detour, &s, 1e-11).unwrap();
            worst = worst.max(linalg::relative_frobenius(&x, &y));
        }
        within(worst, PATH_TOL)
    })
}

fn compatibility() -> Outcome {
    let mut rng = rng(4);
    let mut worst: f64 = 0.0;
    let mut slope_miss: f64 = 0.0;
    for k in 0..50 {
        let n = 2 + k % 3;
        let u = sampling::chamber_point(&mut rng, n);
        let t = sampling::triple(&mut rng, n);
        let ux = sampling::real_vector(&mut rng, n);
        let uy = sampling::real_vector(&mut rng, n);
        let zetas = sampling::spectral_samples(&mut rng, &u, 10);
        worst = worst.max(assembly::compatibility_residual(&u, &t, &ux, &uy, &zetas).unwrap());
        let bp = assembly::bilinear_polys(&u, &t).unwrap();
        let evo = assembly::evolutionary_form(&assembly::system_from_bilinears(&bp)).unwrap();
        let ut = assembly::time_derivative(&evo, &ux, &uy);
        let points: Vec<(f64, f64)> = [1e-6, 1e-4, 1e-2]
            .iter()
            .map(|&eps| {
                let mut v = ut.clone();
                v[0] += eps;
                (eps, assembly::spectral_residual(&u, &bp, &v, &ux, &uy, &zetas, &CompatMode::Cleared).unwrap())
            })
            .collect();
        slope_miss = slope_miss.max((verifier::loglog_slope(&points) - 1.0).abs());
    }
    Outcome {
        pass: worst < COMPAT_TOL && slope_miss < SLOPE_TOL,
        detail: format!("max {worst:.3e} < {COMPAT_TOL:.0e}; |slope - 1| {slope_miss:.3e} < {SLOPE_TOL}"),
    }
}

fn extraction() -> Outcome {
    let mut rng = rng(5);
    let (mut spread, mut agree): (f64, f64) = (0.0, 0.0);
    for n in [2, 3] {
        for _ in 0..20 {
            let u = sampling::chamber_point(&mut rng, n);
            let s = sampling::exponents(&mut rng, n);
            let t = sampling::triple(&mut rng, n);
            let qs = sampling::circle_samples(&mut rng, &u, 5);
            let ab = pseudo::extract_ab(&u, &s, &t, &qs, Branch::Principal).unwrap();
            let evo = assembly::evolutionary_form(&assembly::assemble_system(&u, &t).unwrap()).unwrap();
            spread = spread.max(ab.spread);
            agree = agree.max(verifier::extraction_disagreement(&ab, &evo));
        }
    }
    Outcome {
        pass: spread < EXTRACTION_SPREAD_TOL && agree < EXTRACTION_AGREE_TOL,
        detail: format!("spread {spread:.3e} < {EXTRACTION_SPREAD_TOL:.0e}; (A, B) {agree:.3e} < {EXTRACTION_AGREE_TOL:.0e}"),
    }
}

fn closure() -> Outcome {
    timed(CLOSURE_BUDGET, || {
        let mut rng = rng(6);
        let mut worst: f64 = 0.0;
        let mut weakest_ratio = f64::INFINITY;
        for _ in 0..100 {
            let jet = n2::sample_integrable_jet(&mut rng);
            for _ in 0..10 {
                let gs = n2::sample_g(&mut rng);
                let base = n2::max_abs(&n2::closure_residuals(&jet, &gs).unwrap());
                worst = worst.max(base);
                let field = n2::Field::ALL[rng.gen_range(0..6)];
                let bent = jet.perturbed(field, rng.gen_range(0..3), 1e-3);
                let r = n2::max_abs(&n2::closure_residuals(&bent, &gs).unwrap());
                weakest_ratio = weakest_ratio.min(r / base.max(1e-300));
            }
        }
        Outcome {
            pass: worst < CLOSURE_TOL && weakest_ratio > PERTURB_FACTOR,
            detail: format!("max {worst:.3e} < {CLOSURE_TOL:.0e}; perturbed/base min {weakest_ratio:.3e} > {PERTURB_FACTOR}"),
        }
    })
}

fn relabeling() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let jet = n2::sample_integrable_jet(&mut rng(700 + seed));
        worst = worst.max(n2::max_abs(&n2::condition_residuals(&jet.relabeled())));
    }
    within(worst, RELABEL_TOL)
}

fn theta_laws() -> Outcome {
    let ctx = ThetaCtx::new(DEFAULT_TAU).unwrap();
    let tau = ctx.tau();
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    let mut rng = rng(8);
    let mut worst = ctx.theta(Complex64::new(0.0, 0.0)).norm();
    for _ in 0..50 {
        let z = Complex64::new(rng.gen_range(-0.5..0.5), 0.0) + tau * rng.gen_range(-0.5..0.5);
        let t = ctx.theta(z);
        let mult = -(-two_pi_i * z).exp();
        worst = worst.max(rel(ctx.theta(z + 1.0), t)).max(rel(ctx.theta(z + tau), mult * t)).max(rel(ctx.theta(-z), mult * t));
    }
    Outcome {
        pass: worst < THETA_TOL && ctx.terms() <= THETA_MAX_TERMS,
        detail: format!("max {worst:.3e} < {THETA_TOL:.0e}; M = {} <= {THETA_MAX_TERMS}", ctx.terms()),
    }
}

fn psi_basis() -> Outcome {
    let ctx = ThetaCtx::new(DEFAULT_TAU).unwrap();
    let mut rng = rng(9);
    let (mut member, mut lin): (f64, f64) = (0.0, 0.0);
    for n in 3..=5 {
        for _ in 0..10 {
            let pt = elliptic::sample_point(&mut rng, n, DEFAULT_ETA, &ctx, 0.15);
            let c = pt.sum() - pt.eta();
            for k in 0..n {
                member = member.max(elliptic::theta_space_member(|z| elliptic::psi_basis(z, &pt, &ctx)[k], n, c, &ctx, None));
                let e: Vec<Complex64> = (0..n).map(|j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect();
                for i in 0..n {
                    lin = lin.max(elliptic::linell_residual(&pt, &e, i, 1e-3, &ctx).unwrap());
                }
            }
        }
    }
    Outcome {
        pass: member < MEMBERSHIP_TOL && lin < LINELL_TOL,
        detail: format!("membership {member:.3e} < {MEMBERSHIP_TOL:.0e}; linear system {lin:.3e} < {LINELL_TOL:.0e}"),
    }
}

fn frame_change() -> Outcome {
    let ctx = ThetaCtx::new(DEFAULT_TAU).unwrap();
    let reference = verifier::frame_change_reference().kernel();
    let triple = EllipticTriple::standard(3).unwrap();
    let mut rng = rng(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let pt = elliptic::sample_point(&mut rng, 3, DEFAULT_ETA, &ctx, 0.15);
        let kernel = elliptic::assemble_exell(&pt, &triple, &ctx).unwrap().kernel();
        worst = worst.max(linalg::max_principal_angle(&kernel, &reference));
    }
    within(worst, FRAME_CHANGE_TOL)
}

fn translation() -> Outcome {
    let ctx = ThetaCtx::new(DEFAULT_TAU).unwrap();
    let mut rng = rng(11);
    let mut worst: f64 = 0.0;
    for n in [4, 5] {
        for _ in 0..10 {
            let pt = elliptic::sample_point(&mut rng, n, DEFAULT_ETA, &ctx, 0.15);
            let t = elliptic::sample_triple(&mut rng, n);
            let v = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)) / 3.0;
            let a = elliptic::assemble_exell(&pt, &t, &ctx).unwrap();
            let b = elliptic::assemble_exell(&pt.translated(v, &ctx).unwrap(), &t, &ctx).unwrap();
            let scale = [&a.t, &a.x, &a.y].iter().map(|m| linalg::max_abs(m)).fold(1.0, f64::max);
            worst = worst.max(a.max_difference(&b) / scale);
        }
    }
    within(worst, TRANSLATION_TOL)
}

fn elliptic_compat() -> Outcome {
    let ctx = ThetaCtx::new(DEFAULT_TAU).unwrap();
    let mut rng = rng(12);
    let (mut compat, mut cross): (f64, f64) = (0.0, 0.0);
    let n = 4;
    for _ in 0..20 {
        let pt = elliptic::sample_point(&mut rng, n, DEFAULT_ETA, &ctx, 0.15);
        let t = elliptic::sample_triple(&mut rng, n);
        let kernel = elliptic::assemble_exell(&pt, &t, &ctx).unwrap().kernel();
        let v = &kernel * DVector::from_vec(sampling::complex_vector(&mut rng, kernel.ncols()));
        let part = |k: usize| v.rows(k * n, n).iter().copied().collect::<Vec<_>>();
        let zetas = elliptic::admissible_zetas(&pt, &ctx, 0.1);
        compat = compat.max(elliptic::elliptic_compat_residual(&pt, &t, &part(0), &part(1), &part(2), &zetas, &ctx).unwrap());
        for q in zetas {
            match elliptic::elliptic_pseudo_fields(q, &pt, &t, &ctx) {
                Ok(jet) => cross = cross.max(jet.cross_residual),
                Err(Error::MovableSingularity(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
    Outcome {
        pass: compat < ELLIPTIC_COMPAT_TOL && cross < CROSS_TOL,
        detail: format!("compatibility {compat:.3e} < {ELLIPTIC_COMPAT_TOL:.0e}; cross identity {cross:.3e} < {CROSS_TOL:.0e}"),
    }
}

fn cli_determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json");
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_verify"))
            .arg("--config")
            .arg(&config)
            .current_dir(dir.path())
            .output()
            .unwrap()
            .status;
        let text = std::fs::read_to_string(dir.path().join("verify-report.json")).unwrap_or_default();
        let mut report: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
        if let Some(suites) = report["suites"].as_array_mut() {
            for s in suites {
                s.as_object_mut().map(|o| o.remove("seconds"));
            }
        }
        (status.code(), report)
    };
    let (code_a, a) = run();
    let (code_b, b) = run();
    Outcome {
        pass: code_a == Some(0) && code_b == Some(0) && a == b && !a.is_null(),
        detail: format!("exit codes {code_a:?}, {code_b:?}; reports equal: {}", a == b),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("connection action exactness", connection_action),
        ("zero curvature", zero_curvature),
        ("path independence", path_independence),
        ("assembled-system compatibility", compatibility),
        ("pseudopotential extraction", extraction),
        ("two-component closure", closure),
        ("two-component relabeling", relabeling),
        ("theta laws", theta_laws),
        ("psi basis", psi_basis),
        ("frame-change invariance", frame_change),
        ("translation invariance", translation),
        ("elliptic compatibility", elliptic_compat),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let out = check();
        let word = if out.pass { "PASS" } else { "FAIL" };
        println!("{word} {:>2} {name}: {}", k + 1, out.detail);
        if !out.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
