use hydropseudo::assembly::{self, SolutionTriple};
use hydropseudo::error::Error;
use hydropseudo::linalg;
use hydropseudo::polyode::Poly;
use hydropseudo::pseudo::{self, FieldSign, FlowVar, QState};
use hydropseudo::rational::{Branch, ChamberPoint, ExponentVector};
use hydropseudo::sampling;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn fixture() -> (ChamberPoint, ExponentVector, SolutionTriple) {
    let u = ChamberPoint::new(vec![1.7, 2.4, 3.3]).unwrap();
    let s = ExponentVector::new(vec![0.3, -0.6, 1.2, 0.4, -0.9]);
    let t = SolutionTriple::new(
        Poly::from_real(&[1.0, 0.3, -0.2, 0.1]),
        Poly::from_real(&[0.2, -1.0, 0.5, 0.7]),
        Poly::from_real(&[-0.4, 0.6, 0.9, -0.3]),
    )
    .unwrap();
    (u, s, t)
}

fn relative_disagreement(ab: &pseudo::ExtractedAB, evo: &assembly::EvolutionaryForm) -> f64 {
    let scale = linalg::max_abs(&evo.a).max(linalg::max_abs(&evo.b)).max(1.0);
    linalg::max_abs(&(&ab.a - &evo.a)).max(linalg::max_abs(&(&ab.b - &evo.b))) / scale
}

#[test]
fn extraction_matches_assembled_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..60 {
        let n = 2 + trial % 2;
        let u = sampling::chamber_point(&mut rng, n);
        let s = sampling::exponents(&mut rng, n);
        let t = sampling::triple(&mut rng, n);
        let qs = sampling::circle_samples(&mut rng, &u, 5);
        let ab = pseudo::extract_ab(&u, &s, &t, &qs, Branch::Principal).unwrap();
        let evo = assembly::evolutionary_form(&assembly::assemble_system(&u, &t).unwrap()).unwrap();
        assert!(ab.spread < 1e-8, "spread {}", ab.spread);
        assert!(relative_disagreement(&ab, &evo) < 1e-8);
    }
}

#[test]
fn extraction_on_the_real_branch() {
    let (u, s, t) = fixture();
    let qs: Vec<Complex64> = (0..6).map(|k| c(4.0 + 0.9 * k as f64)).collect();
    let ab = pseudo::extract_ab(&u, &s, &t, &qs, Branch::Real).unwrap();
    let evo = assembly::evolutionary_form(&assembly::assemble_system(&u, &t).unwrap()).unwrap();
    assert!(ab.spread < 1e-10);
    assert!(relative_disagreement(&ab, &evo) < 1e-8);
}

#[test]
fn noisy_jets_raise_the_spread() {
    let (u, s, t) = fixture();
    let qs: Vec<Complex64> = (0..5).map(|k| c(4.0 + 0.9 * k as f64)).collect();
    let mut jets = pseudo::jets_at(&u, &s, &t, &qs, Branch::Real).unwrap();
    let clean = pseudo::extract_ab_from_jets(&jets).unwrap().spread;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for jet in &mut jets {
        for f in &mut jet.f_u {
            *f *= 1.0 + 1e-4 * rng.gen_range(-1.0..1.0);
        }
    }
    let noisy = pseudo::extract_ab_from_jets(&jets).unwrap().spread;
    assert!(clean < 1e-12);
    assert!(noisy > 1e-5, "noisy spread {noisy}");
}

#[test]
fn too_few_samples_is_a_dimension_error() {
    let (u, s, t) = fixture();
    let r = pseudo::extract_ab(&u, &s, &t, &[c(4.0), c(5.0)], Branch::Real);
    assert!(matches!(r, Err(Error::Dimension(_))));
}

#[test]
fn involution_holds_to_fourth_order() {
    let (u, s, t) = fixture();
    let st = QState::new(c(4.5), u, s, Branch::Real).unwrap();
    for (a, b) in [(FlowVar::Xi, FlowVar::U(0)), (FlowVar::Xi, FlowVar::U(2)), (FlowVar::U(0), FlowVar::U(1))] {
        let coarse = pseudo::mixed_partial_residual(&st, &t, a, b, 1e-3, 1e-13).unwrap();
        let fine = pseudo::mixed_partial_residual(&st, &t, a, b, 3e-4, 1e-13).unwrap();
        assert!(fine < 1e-8, "{a:?} {b:?}: {fine}");
        // Fourth order predicts a factor 3^4 = 81.
        assert!(coarse / fine > 30.0, "{a:?} {b:?}: {coarse} -> {fine}");
    }
}

#[test]
fn reversed_sign_fails_involution() {
    let (u, s, t) = fixture();
    let st = QState::new(c(4.5), u, s, Branch::Real).unwrap().with_sign(FieldSign::Reversed);
    let r = pseudo::mixed_partial_residual(&st, &t, FlowVar::Xi, FlowVar::U(1), 3e-4, 1e-13).unwrap();
    assert!(r > 0.5, "reversed-sign residual {r}");
}

#[test]
fn flipped_sign_leaves_extraction_unchanged() {
    let (u, s, t) = fixture();
    let qs: Vec<Complex64> = (0..5).map(|k| c(4.0 + 0.9 * k as f64)).collect();
    let flip = |j: pseudo::PseudoJet| pseudo::PseudoJet {
        f_u: j.f_u.iter().map(|z| -z).collect(),
        g_u: j.g_u.iter().map(|z| -z).collect(),
        cross_expected: j.cross_expected.iter().map(|z| -z).collect(),
        ..j
    };
    let jets = pseudo::jets_at(&u, &s, &t, &qs, Branch::Real).unwrap();
    let flipped: Vec<_> = jets.iter().cloned().map(flip).collect();
    let a = pseudo::extract_ab_from_jets(&jets).unwrap();
    let b = pseudo::extract_ab_from_jets(&flipped).unwrap();
    assert!(linalg::max_abs(&(&a.a - &b.a)) < 1e-12 && linalg::max_abs(&(&a.b - &b.b)) < 1e-12);
}

#[test]
fn pseudopotential_compatibility_on_solutions_only() {
    let (u, s, t) = fixture();
    let ux = vec![c(0.3), c(-1.1), c(0.8)];
    let uy = vec![c(0.5), c(0.2), c(-0.7)];
    let qs: Vec<Complex64> = (0..5).map(|k| c(4.0 + 0.7 * k as f64)).collect();
    let on = pseudo::pseudo_compat_residual(&u, &s, &t, &ux, &uy, &qs, Branch::Real).unwrap();
    assert!(on < 1e-12);
    let evo = assembly::evolutionary_form(&assembly::assemble_system(&u, &t).unwrap()).unwrap();
    let mut ut = assembly::time_derivative(&evo, &ux, &uy);
    ut[1] += 0.1;
    let off = pseudo::pseudo_compat_residual_with_ut(&u, &s, &t, &ut, &ux, &uy, &qs, Branch::Real).unwrap();
    assert!(off > 1e-4);
}

#[test]
fn movable_singularity_is_reported() {
    let u = ChamberPoint::new(vec![1.5, 2.5]).unwrap();
    let s = ExponentVector::new(vec![0.2, 0.3, -0.4, 0.5]);
    // phi vanishes at 4.
    let t = SolutionTriple::new(
        Poly::from_real(&[-4.0, 1.0, 0.0]),
        Poly::from_real(&[1.0, 0.0, 1.0]),
        Poly::from_real(&[0.0, 1.0, 1.0]),
    )
    .unwrap();
    let st = QState::new(c(4.0), u, s, Branch::Real).unwrap();
    assert!(matches!(pseudo::fg_derivatives(&st, &t), Err(Error::MovableSingularity(_))));
}

#[test]
fn reconstructed_f_follows_its_derivative() {
    let (u, s, t) = fixture();
    let st = QState::new(c(4.5), u.clone(), s.clone(), Branch::Real).unwrap();
    let trace = pseudo::reconstruct_fg(&st, &t, 0.2, 200, 1e-12).unwrap();
    let h = trace.xi[1] - trace.xi[0];
    for k in [20, 100, 180] {
        let slope = (trace.f[k + 1] - trace.f[k - 1]) / (2.0 * h);
        let jet = pseudo::fg_derivatives(&QState::new(trace.q[k], u.clone(), s.clone(), Branch::Real).unwrap(), &t).unwrap();
        assert!((slope - jet.f_xi).norm() < 1e-5 * jet.f_xi.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cross_identity_holds(seed in any::<u64>(), n in 2usize..5, offset in 0.5f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sampling::chamber_point(&mut rng, n);
        let s = sampling::exponents(&mut rng, n);
        let t = sampling::triple(&mut rng, n);
        let q = c(u.get(n - 1) + offset);
        match pseudo::fg_derivatives(&QState::new(q, u, s, Branch::Real).unwrap(), &t) {
            Ok(jet) => prop_assert!(jet.cross_identity_residual() < pseudo::CROSS_IDENTITY_TOL),
            Err(Error::MovableSingularity(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn expansion_spread_is_scale_free(seed in any::<u64>(), k in -6i32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sampling::chamber_point(&mut rng, 3);
        let s = sampling::exponents(&mut rng, 3);
        let t = sampling::triple(&mut rng, 3);
        let qs = sampling::circle_samples(&mut rng, &u, 5);
        let scaled = t.transformed(&(linalg::CMatrix::identity(3, 3) * c(10f64.powi(k))));
        let a = pseudo::extract_ab(&u, &s, &t, &qs, Branch::Principal).unwrap();
        let b = pseudo::extract_ab(&u, &s, &scaled, &qs, Branch::Principal).unwrap();
        let scale = linalg::max_abs(&a.a).max(linalg::max_abs(&a.b)).max(1.0);
        prop_assert!(linalg::max_abs(&(&a.a - &b.a)) / scale < 1e-9);
        prop_assert!(b.spread < 1e-8);
    }
}
