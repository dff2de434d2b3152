use nalgebra::DMatrix;
use num_complex::Complex64;

/// Values a finite-difference stencil can combine linearly.
pub trait Stencil: Sized {
    /// `sum w_k * x_k`; all terms share one shape.
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl Stencil for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, x)| w * **x).sum()
    }
}

impl Stencil for Complex64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, x)| **x * *w).sum()
    }
}

impl Stencil for Vec<Complex64> {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let len = terms.first().map_or(0, |t| t.1.len());
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (w, x) in terms {
            for (o, v) in out.iter_mut().zip(x.iter()) {
                *o += *v * *w;
            }
        }
        out
    }
}

impl Stencil for DMatrix<Complex64> {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let (r, c) = terms.first().map_or((0, 0), |t| t.1.shape());
        let mut out = DMatrix::zeros(r, c);
        for (w, x) in terms {
            out += x.map(|v| v * *w);
        }
        out
    }
}

/// Default step `1e-5 * max(1, |x|)`.
pub fn default_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Fourth-order central difference
/// `(f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / (12 h)`.
pub fn fd_derivative<T, F>(f: F, x: f64, h: f64) -> T
where
    T: Stencil,
    F: Fn(f64) -> T,
{
    let m2 = f(x - 2.0 * h);
    let m1 = f(x - h);
    let p1 = f(x + h);
    let p2 = f(x + 2.0 * h);
    let outer = T::combine(&[(1.0, &m2), (-1.0, &p2)]);
    let inner = T::combine(&[(1.0, &p1), (-1.0, &m1)]);
    let s = 1.0 / (12.0 * h);
    T::combine(&[(s, &outer), (8.0 * s, &inner)])
}

/// One Richardson extrapolation of [`fd_derivative`] between `h` and `h/2`,
/// cancelling the leading `h^4` truncation term.
pub fn fd_derivative_richardson<T, F>(f: F, x: f64, h: f64) -> T
where
    T: Stencil,
    F: Fn(f64) -> T,
{
    let coarse = fd_derivative(&f, x, h);
    let fine = fd_derivative(&f, x, 0.5 * h);
    T::combine(&[(16.0 / 15.0, &fine), (-1.0 / 15.0, &coarse)])
}
