use num_complex::Complex64;

use super::{ChamberPoint, ExponentVector};
use crate::error::{Error, Result};

/// How fractional powers of the bases `z, z - 1, z - u_j` are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// All bases must be real and positive (`z > u_n` on the real line).
    #[default]
    Real,
    /// Principal branch; bases within `1e-3` of the negative real axis are rejected.
    Principal,
}

/// Distance from the cut below which principal-branch evaluation is refused.
pub const CUT_EXCLUSION: f64 = 1e-3;

/// `prod_k base_k(z) ^ e_k` over the bases `z, z - 1, z - u_1, ..., z - u_n`
/// with exponents `e_k = weight(s_k)`.
pub fn power_product<W>(u: &ChamberPoint, s: &ExponentVector, z: Complex64, branch: Branch, weight: W) -> Result<Complex64>
where
    W: Fn(f64) -> f64,
{
    let mut log_sum = Complex64::new(0.0, 0.0);
    for (k, r) in u.roots().into_iter().enumerate() {
        let base = z - r;
        let e = weight(s.get(k));
        if e == 0.0 {
            continue;
        }
        let log_base = match branch {
            Branch::Real => {
                if base.im != 0.0 || base.re <= 0.0 {
                    return Err(Error::BranchCut(format!("{base} (real mode needs a positive base)")));
                }
                Complex64::new(base.re.ln(), 0.0)
            }
            Branch::Principal => {
                if base.norm() == 0.0 {
                    return Err(Error::SingularSample(format!("{z}")));
                }
                if base.re < 0.0 && base.im.abs() < CUT_EXCLUSION {
                    return Err(Error::BranchCut(format!("{base}")));
                }
                base.ln()
            }
        };
        log_sum += log_base * e;
    }
    Ok(log_sum.exp())
}
