use num_complex::Complex64;

use crate::error::{Error, Result};

/// Polyline in a real parameter space; consecutive waypoints form straight segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PathInU {
    waypoints: Vec<Vec<f64>>,
}

impl PathInU {
    pub fn new(waypoints: Vec<Vec<f64>>) -> Result<Self> {
        let dim = waypoints
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Dimension("path needs at least one waypoint".into()))?;
        if waypoints.iter().any(|w| w.len() != dim) {
            return Err(Error::Dimension("waypoints differ in dimension".into()));
        }
        Ok(PathInU { waypoints })
    }

    pub fn segment(from: Vec<f64>, to: Vec<f64>) -> Result<Self> {
        Self::new(vec![from, to])
    }

    pub fn waypoints(&self) -> &[Vec<f64>] {
        &self.waypoints
    }

    pub fn start(&self) -> &[f64] {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &[f64] {
        self.waypoints.last().expect("non-empty path")
    }

    pub fn dim(&self) -> usize {
        self.waypoints[0].len()
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| distance(&w[0], &w[1])).sum()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Controls for [`ode_transport`].
#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    pub tol: f64,
    /// Smallest admissible step, relative to the segment length.
    pub min_step: f64,
    pub max_steps: usize,
}

impl TransportOptions {
    pub fn with_tol(tol: f64) -> Self {
        TransportOptions {
            tol,
            min_step: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `dy/ds = field(point(s), tangent, y)` along `path` by arclength `s`.
///
/// `field` receives the current point, the unit tangent of the active segment,
/// and the state. Each segment is integrated with an adaptive Dormand-Prince
/// 5(4) pair; a step is accepted when the embedded error estimate per unit
/// arclength is below `tol * max(1, |y|)`. Step sizes depend only on the inputs,
/// so repeated calls are bitwise reproducible.
pub fn ode_transport<F>(field: F, path: &PathInU, y0: &[Complex64], tol: f64) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64], &[f64], &[Complex64]) -> Vec<Complex64>,
{
    ode_transport_with(field, path, y0, TransportOptions::with_tol(tol))
}

pub fn ode_transport_with<F>(
    field: F,
    path: &PathInU,
    y0: &[Complex64],
    opts: TransportOptions,
) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64], &[f64], &[Complex64]) -> Vec<Complex64>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("transport tolerance must be positive, got {}", opts.tol)));
    }
    let mut y = y0.to_vec();
    let mut travelled = 0.0;
    for seg in path.waypoints().windows(2) {
        let (from, to) = (&seg[0], &seg[1]);
        let len = distance(from, to);
        if len == 0.0 {
            continue;
        }
        let tangent: Vec<f64> = from.iter().zip(to).map(|(a, b)| (b - a) / len).collect();
        let point_at = |s: f64| -> Vec<f64> {
            from.iter().zip(&tangent).map(|(a, t)| a + s * t).collect()
        };
        y = integrate_segment(&field, &point_at, &tangent, len, y, opts, travelled)?;
        travelled += len;
    }
    Ok(y)
}

fn integrate_segment<F, P>(
    field: &F,
    point_at: &P,
    tangent: &[f64],
    len: f64,
    mut y: Vec<Complex64>,
    opts: TransportOptions,
    offset: f64,
) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64], &[f64], &[Complex64]) -> Vec<Complex64>,
    P: Fn(f64) -> Vec<f64>,
{
    let dim = y.len();
    let mut s = 0.0;
    let mut h = (len * 0.05).min(opts.tol.powf(0.2) * len.max(1.0) * 0.5).max(len * 1e-6);
    let min_h = opts.min_step * len.max(1.0);
    let mut k: Vec<Vec<Complex64>> = vec![Vec::new(); 7];
    let mut first = field(&point_at(0.0), tangent, &y);
    let mut steps = 0usize;

    while s < len {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow { arclength: offset + s });
        }
        steps += 1;
        let last = s + h >= len;
        let h_eff = if last { len - s } else { h };

        k[0] = first.clone();
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for (dst, v) in ys.iter_mut().zip(kj) {
                        *dst += v * (a * h_eff);
                    }
                }
            }
            k[stage] = field(&point_at(s + C[stage] * h_eff), tangent, &ys);
        }

        let mut y5 = y.clone();
        let mut err2 = 0.0;
        for i in 0..dim {
            let mut inc5 = Complex64::new(0.0, 0.0);
            let mut inc4 = Complex64::new(0.0, 0.0);
            for st in 0..7 {
                inc5 += k[st][i] * B5[st];
                inc4 += k[st][i] * B4[st];
            }
            y5[i] += inc5 * h_eff;
            err2 += ((inc5 - inc4) * h_eff).norm_sqr();
        }
        let scale = y.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let err = err2.sqrt() / (h_eff * opts.tol * scale);
        if !err.is_finite() {
            h *= 0.25;
            if h < min_h {
                return Err(Error::StepUnderflow { arclength: offset + s });
            }
            continue;
        }

        if err <= 1.0 {
            s = if last { len } else { s + h_eff };
            y = y5;
            // FSAL: the seventh stage is the derivative at the new point.
            first = std::mem::take(&mut k[6]);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err > 1.0 || !last {
            h = (h_eff * factor).min(len);
        }
        if err > 1.0 && h < min_h {
            return Err(Error::StepUnderflow { arclength: offset + s });
        }
    }
    Ok(y)
}

/// Classical fourth-order Runge-Kutta with a fixed number of steps per segment.
pub fn rk4_fixed<F>(field: F, path: &PathInU, y0: &[Complex64], steps: usize) -> Vec<Complex64>
where
    F: Fn(&[f64], &[f64], &[Complex64]) -> Vec<Complex64>,
{
    let mut y = y0.to_vec();
    for seg in path.waypoints().windows(2) {
        let (from, to) = (&seg[0], &seg[1]);
        let len = distance(from, to);
        if len == 0.0 {
            continue;
        }
        let tangent: Vec<f64> = from.iter().zip(to).map(|(a, b)| (b - a) / len).collect();
        let point_at = |s: f64| -> Vec<f64> { from.iter().zip(&tangent).map(|(a, t)| a + s * t).collect() };
        let h = len / steps as f64;
        let axpy = |y: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
            y.iter().zip(k).map(|(a, b)| a + b * c).collect()
        };
        for step in 0..steps {
            let s = step as f64 * h;
            let k1 = field(&point_at(s), &tangent, &y);
            let k2 = field(&point_at(s + 0.5 * h), &tangent, &axpy(&y, &k1, 0.5 * h));
            let k3 = field(&point_at(s + 0.5 * h), &tangent, &axpy(&y, &k2, 0.5 * h));
            let k4 = field(&point_at(s + h), &tangent, &axpy(&y, &k3, h));
            for i in 0..y.len() {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_field_returns_initial_state() {
        let path = PathInU::new(vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let y0 = vec![c(1.5), Complex64::new(-0.25, 2.0)];
        let y = ode_transport(|_, _, y| vec![c(0.0); y.len()], &path, &y0, 1e-10).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn exponential_growth_on_unit_segment() {
        let path = PathInU::segment(vec![0.0], vec![1.0]).unwrap();
        let tol = 1e-10;
        let y = ode_transport(|_, _, y| y.to_vec(), &path, &[c(1.0)], tol).unwrap();
        assert!((y[0].re - std::f64::consts::E).abs() < 10.0 * tol, "{}", y[0].re);
    }

    #[test]
    fn step_underflow_near_pole() {
        // y' = 1 / (1 - s)^2 blows up at s = 1.
        let path = PathInU::segment(vec![0.0], vec![1.0]).unwrap();
        let err = ode_transport(
            |p, _, _| vec![c(1.0 / ((1.0 - p[0]) * (1.0 - p[0])))],
            &path,
            &[c(0.0)],
            1e-10,
        )
        .unwrap_err();
        match err {
            Error::StepUnderflow { arclength } => assert!(arclength > 0.9 && arclength <= 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let path = PathInU::segment(vec![0.0], vec![1.0]).unwrap();
        assert!(ode_transport(|_, _, y| y.to_vec(), &path, &[c(1.0)], 0.0).is_err());
    }
}
