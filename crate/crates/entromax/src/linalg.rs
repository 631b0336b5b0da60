//! Dense arbitrary-precision determinants (crate-internal).
//!
//! The evaluation matrices are tiny (order <= a few dozen) but their
//! entries span enormous dynamic ranges (`exp(lambda)` factors), so the
//! determinants are computed in [`BigReal`] linear scale, where the MPFR
//! exponent range absorbs the magnitudes, and logs are taken at the end.

use rug::Float;

use crate::bigreal::BigReal;

/// Determinant by Gaussian elimination with partial pivoting, carried out
/// entirely at the precision of the inputs. Returns exactly zero when a
/// pivot vanishes.
pub(crate) fn det(mut m: Vec<Vec<BigReal>>, prec: u32) -> BigReal {
    let n = m.len();
    debug_assert!(m.iter().all(|row| row.len() == n));
    if n == 0 {
        return Float::with_val(prec, 1);
    }
    let mut det = Float::with_val(prec, 1);
    for col in 0..n {
        let mut pivot_row = col;
        for r in col + 1..n {
            if m[r][col].cmp_abs(&m[pivot_row][col]) == Some(std::cmp::Ordering::Greater) {
                pivot_row = r;
            }
        }
        if m[pivot_row][col].is_zero() {
            return Float::with_val(prec, 0);
        }
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        det *= m[col][col].clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = Float::with_val(prec, &m[r][col] / &m[col][col]);
            for c in col..n {
                let delta = Float::with_val(prec, &factor * &m[col][c]);
                m[r][c] -= delta;
            }
        }
    }
    det
}
