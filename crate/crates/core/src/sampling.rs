//! Seeded random inputs for the rational family.

use num_complex::Complex64;
use rand::Rng;

use crate::assembly::SolutionTriple;
use crate::polyode::Poly;
use crate::rational::{ChamberPoint, ExponentVector};

/// Minimum gap between consecutive chamber coordinates (and between `1` and `u_1`).
pub const CHAMBER_GAP: f64 = 0.2;

/// `1 < u_1 < ... < u_n` with consecutive gaps in `[0.2, 1.2]`.
pub fn chamber_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ChamberPoint {
    let mut u = Vec::with_capacity(n);
    let mut last = 1.0;
    for _ in 0..n {
        last += rng.gen_range(CHAMBER_GAP..CHAMBER_GAP + 1.0);
        u.push(last);
    }
    ChamberPoint::new(u).expect("increasing coordinates above 1")
}

/// `n + 2` exponents uniform in `[-2, 2]`.
pub fn exponents<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ExponentVector {
    ExponentVector::new((0..n + 2).map(|_| rng.gen_range(-2.0..2.0)).collect())
}

/// Real polynomial of length `len` with coefficients uniform in `[-1, 1]`.
pub fn real_poly<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Poly {
    Poly::from_real(&(0..len).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())
}

/// Three independent real polynomials of degree `<= n`.
pub fn triple<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SolutionTriple {
    loop {
        let t = SolutionTriple::new(real_poly(rng, n + 1), real_poly(rng, n + 1), real_poly(rng, n + 1))
            .expect("equal lengths");
        if t.is_independent() {
            return t;
        }
    }
}

/// Real vector of length `n` with entries in `[-1, 1]`.
pub fn real_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect()
}

/// Complex vector with real and imaginary parts in `[-1, 1]`.
pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Real spectral samples in `(u_n + 0.5, u_n + 5)`, clear of every pole.
pub fn spectral_samples<R: Rng + ?Sized>(rng: &mut R, u: &ChamberPoint, count: usize) -> Vec<Complex64> {
    let top = u.get(u.n() - 1);
    (0..count)
        .map(|_| Complex64::new(rng.gen_range(top + 0.5..top + 5.0), 0.0))
        .collect()
}

/// Sorted spectral samples, as used for `q`-samples of the pseudopotential.
pub fn sorted_samples<R: Rng + ?Sized>(rng: &mut R, u: &ChamberPoint, count: usize) -> Vec<Complex64> {
    let mut q = spectral_samples(rng, u, count);
    q.sort_by(|a, b| a.re.total_cmp(&b.re));
    q
}

/// `count` points equally spaced on a circle that encloses `0, 1, u_1, ..., u_n`
/// with margin 1, rotated by a random jitter. Well spread in the complex
/// plane, which keeps least-squares fits over the samples well conditioned;
/// evaluate with [`crate::rational::Branch::Principal`].
pub fn circle_samples<R: Rng + ?Sized>(rng: &mut R, u: &ChamberPoint, count: usize) -> Vec<Complex64> {
    let top = u.get(u.n() - 1);
    let center = 0.5 * top;
    let radius = 0.5 * top + 1.0;
    let spacing = std::f64::consts::TAU / count as f64;
    // The circle meets the cut at angle pi; it stays midway between two
    // samples, at least a quarter spacing from each.
    let jitter = rng.gen_range(-0.25..0.25) * spacing;
    (0..count)
        .map(|k| {
            let a = std::f64::consts::PI + (k as f64 + 0.5) * spacing + jitter;
            Complex64::new(center + radius * a.cos(), radius * a.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chamber_gaps_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..6 {
            let u = chamber_point(&mut rng, n);
            assert!(u.get(0) >= 1.0 + CHAMBER_GAP);
            assert!(u.min_gap() >= CHAMBER_GAP);
        }
    }

    #[test]
    fn circle_clear_of_cut_and_poles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = chamber_point(&mut rng, 3);
            for z in circle_samples(&mut rng, &u, 5) {
                assert!(z.norm() > 0.9 && (z - 1.0).norm() > 0.9);
                assert!(u.as_slice().iter().all(|&x| (z - x).norm() > 0.9));
                assert!(z.re > -0.5 || z.im.abs() > 0.1);
            }
        }
    }

    #[test]
    fn samples_clear_of_poles() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = chamber_point(&mut rng, 3);
        for z in spectral_samples(&mut rng, &u, 50) {
            assert!(z.re > u.get(2) + 0.5);
        }
    }
}
