//! Exact evaluation of `E_1(Y) = log ∫ exp(-<Y, X>) dμ_1(X)` on rank-one
//! projections, together with its gradient.
//!
//! For diagonal `Y = diag(y)` the integral over rank-one projections
//! reduces to an integral over the probability simplex of eigenvalue
//! weights, and that integral has a closed form: with distinct values
//! `λ_1 > ... > λ_κ` of multiplicities `m_1, ..., m_κ`,
//!
//! ```text
//!   ∫ exp(-<Y, X>) dμ_1(X) = (n-1)! * det M(t) / Π_{i<j} (t_j - t_i)^{m_i m_j},
//! ```
//!
//! where `t_i = -λ_i` (so `t` is ascending) and `M(t)` is the confluent
//! exponential-Vandermonde matrix of [`build_eval_matrix`]: block `i`
//! contributes columns `j = 0..m_i-1` with rows
//!
//! ```text
//!   row r (r = 0..n-2):   C(r, j) t_i^(r-j)      (0 when j > r)
//!   last row:             γ^j exp(γ t_i) / j!     (γ = 1 here)
//! ```
//!
//! Both `det M` and the Vandermonde denominator are positive in this
//! ordering, which is asserted; a nonpositive determinant after pivoting
//! reports [`Error::Unstable`]. The gradient uses the same determinant
//! with one column of a block replaced ([`build_grad_matrix`]):
//!
//! ```text
//!   ∂E_1/∂y_l = -Σ_{i≠p} m_i/(λ_p - λ_i) - det M_p(t) / det M(t),
//! ```
//!
//! for `l` in cluster `p`. For mutually distinct values the partial
//! fraction expansion gives an independent route,
//!
//! ```text
//!   exp(E_1) = (n-1)! Σ_i exp(-λ_i) / Π_{j≠i} (λ_j - λ_i),
//! ```
//!
//! kept deliberately separate as a cross-check ([`partial_fraction_e1`]).
//!
//! All evaluations run through the precision-doubling driver of
//! [`crate::bigreal`].

use rug::Float;

use crate::bigreal::{self, big, binom, ln_factorial, validate_prec, BigReal};
use crate::linalg::det;
use crate::matrix::Spectrum;
use crate::{Error, Result};

/// Confluent exponential-Vandermonde matrix `M(s, γ)` built at the
/// spectrum's own distinct values, in their stored (descending) order.
#[derive(Debug, Clone)]
pub struct EvalMatrix {
    /// Row-major entries; dimension `n x n` with `n = s.n()`.
    pub entries: Vec<Vec<BigReal>>,
}

/// Gradient variant `M_p(s)`: same as the `γ = 1` evaluation matrix except
/// that the last column of block `p` follows the column pattern `j = m_p`.
#[derive(Debug, Clone)]
pub struct GradMatrix {
    /// Row-major entries; dimension `n x n`.
    pub entries: Vec<Vec<BigReal>>,
    /// Block whose final column was replaced.
    pub block: usize,
}

/// One column of the evaluation matrix at point `t` with column index `j`.
fn column_at(
    powers: &[BigReal],
    exp_gamma_t: &BigReal,
    gamma_pow: &BigReal,
    j: u64,
    n: usize,
    prec: u32,
) -> Vec<BigReal> {
    let mut col = Vec::with_capacity(n);
    for r in 0..(n as u64).saturating_sub(1) {
        if j > r {
            col.push(big(prec, 0.0));
        } else {
            let b = binom(prec, r, j);
            col.push(b * powers[(r - j) as usize].clone());
        }
    }
    let fac = bigreal::factorial(prec, u32::try_from(j).expect("multiplicity fits u32"));
    col.push(Float::with_val(prec, gamma_pow * exp_gamma_t) / fac);
    col
}

/// Builds the full matrix at the given points (in the given order), with
/// the stated multiplicities. Row-major.
pub(crate) fn matrix_at_points(
    points: &[BigReal],
    mult: &[usize],
    gamma: &BigReal,
    prec: u32,
) -> Vec<Vec<BigReal>> {
    let n: usize = mult.iter().sum();
    let mut columns: Vec<Vec<BigReal>> = Vec::with_capacity(n);
    for (t, &m) in points.iter().zip(mult) {
        let mut t_prec = t.clone();
        t_prec.set_prec(prec);
        // powers[e] = t^e for e = 0..n-2 (and 0th power when n = 1).
        let max_pow = n.saturating_sub(2).max(0);
        let mut powers = Vec::with_capacity(max_pow + 1);
        powers.push(big(prec, 1.0));
        for _ in 0..max_pow {
            let last = powers.last().unwrap().clone();
            powers.push(last * &t_prec);
        }
        let exp_gamma_t = Float::with_val(prec, gamma * &t_prec).exp();
        let mut gamma_pow = big(prec, 1.0);
        for j in 0..m as u64 {
            columns.push(column_at(&powers, &exp_gamma_t, &gamma_pow, j, n, prec));
            gamma_pow *= Float::with_val(prec, gamma);
        }
    }
    // Transpose into row-major.
    (0..n).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect()
}

/// Public evaluation matrix `M(s, γ)` at the spectrum's distinct values.
pub fn build_eval_matrix(s: &Spectrum, gamma: &BigReal, prec: u32) -> Result<EvalMatrix> {
    validate_prec(prec)?;
    Ok(EvalMatrix { entries: matrix_at_points(s.distinct(), s.mult(), gamma, prec) })
}

/// Gradient matrix `M_p(s)` at `γ = 1`: block `p`'s last column replaced
/// by the pattern for column index `j = m_p`.
pub fn build_grad_matrix(s: &Spectrum, p: usize, prec: u32) -> Result<GradMatrix> {
    validate_prec(prec)?;
    if p >= s.kappa() {
        return Err(Error::Invalid(format!(
            "block index {p} out of range for {} distinct values",
            s.kappa()
        )));
    }
    let one = big(prec, 1.0);
    let entries = grad_matrix_at_points(s.distinct(), s.mult(), p, &one, prec);
    Ok(GradMatrix { entries, block: p })
}

fn grad_matrix_at_points(
    points: &[BigReal],
    mult: &[usize],
    p: usize,
    gamma: &BigReal,
    prec: u32,
) -> Vec<Vec<BigReal>> {
    let n: usize = mult.iter().sum();
    let mut m = matrix_at_points(points, mult, gamma, prec);
    // Column offset of the last column of block p.
    let col: usize = mult[..p].iter().sum::<usize>() + mult[p] - 1;
    let j = mult[p] as u64;
    let mut t_prec = points[p].clone();
    t_prec.set_prec(prec);
    let max_pow = n.saturating_sub(2).max(0);
    let mut powers = Vec::with_capacity(max_pow + 1);
    powers.push(big(prec, 1.0));
    for _ in 0..max_pow {
        let last = powers.last().unwrap().clone();
        powers.push(last * &t_prec);
    }
    let exp_gamma_t = Float::with_val(prec, gamma * &t_prec).exp();
    let mut gamma_pow = big(prec, 1.0);
    for _ in 0..j {
        gamma_pow *= Float::with_val(prec, gamma);
    }
    let replacement = column_at(&powers, &exp_gamma_t, &gamma_pow, j, n, prec);
    for (r, row) in m.iter_mut().enumerate() {
        row[col] = replacement[r].clone();
    }
    m
}

/// `log Π_{i<j} (t_j - t_i)^{m_i m_j}` for ascending points `t`; all
/// factors are positive by the ordering.
pub(crate) fn log_vandermonde(points: &[BigReal], mult: &[usize], prec: u32) -> Result<BigReal> {
    let mut acc = big(prec, 0.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let gap = Float::with_val(prec, &points[j] - &points[i]);
            if gap <= 0 {
                return Err(Error::Unstable(
                    "evaluation points are not strictly ascending; cluster the spectrum first"
                        .into(),
                ));
            }
            acc += gap.ln() * big(prec, (mult[i] * mult[j]) as f64);
        }
    }
    Ok(acc)
}

/// Ascending evaluation points `t_i = -λ_i` (exact negation; the spectrum
/// stores descending `λ`).
pub(crate) fn ascending_points(s: &Spectrum, prec: u32) -> Vec<BigReal> {
    s.distinct()
        .iter()
        .map(|v| {
            let mut t = -v.clone();
            t.set_prec(prec);
            t
        })
        .collect()
}

fn eval_e1_once(s: &Spectrum, prec: u32) -> Result<BigReal> {
    let n = s.n();
    let t = ascending_points(s, prec);
    let one = big(prec, 1.0);
    let m = matrix_at_points(&t, s.mult(), &one, prec);
    let d = det(m, prec);
    if d <= 0 {
        return Err(Error::Unstable(format!(
            "evaluation determinant came out nonpositive ({}) at {prec} bits",
            d.to_f64()
        )));
    }
    let mut e = d.ln();
    e += ln_factorial(prec, (n - 1) as u32);
    e -= log_vandermonde(&t, s.mult(), prec)?;
    Ok(e)
}

/// `E_1(Y)` for `Y` with the given spectrum, via the determinant formula
/// under the precision-doubling driver.
pub fn eval_e1(s: &Spectrum, prec: u32) -> Result<BigReal> {
    validate_prec(prec)?;
    if s.kappa() == 1 {
        // Fully degenerate spectrum: the integrand is constant exp(-c).
        let mut e = -s.distinct()[0].clone();
        e.set_prec(prec);
        return Ok(e);
    }
    bigreal::stabilize(prec, |p| eval_e1_once(s, p), bigreal::agree_scalar)
}

fn grad_e1_once(s: &Spectrum, prec: u32) -> Result<Vec<BigReal>> {
    let t = ascending_points(s, prec);
    let lambda = s.distinct();
    let mult = s.mult();
    let one = big(prec, 1.0);
    let d = det(matrix_at_points(&t, mult, &one, prec), prec);
    if d <= 0 {
        return Err(Error::Unstable(format!(
            "evaluation determinant came out nonpositive ({}) at {prec} bits",
            d.to_f64()
        )));
    }
    let mut out = Vec::with_capacity(s.kappa());
    for p in 0..s.kappa() {
        let mut g = big(prec, 0.0);
        for (i, li) in lambda.iter().enumerate() {
            if i != p {
                let gap = Float::with_val(prec, &lambda[p] - li);
                g -= big(prec, mult[i] as f64) / gap;
            }
        }
        let dp = det(grad_matrix_at_points(&t, mult, p, &one, prec), prec);
        g -= dp / d.clone();
        out.push(g);
    }
    Ok(out)
}

/// Gradient of `E_1` with respect to the distinct values: entry `p` is
/// `∂E_1/∂y_l` for any coordinate `l` in cluster `p`. Expand with
/// [`Spectrum::expand`] for per-coordinate form; components lie in
/// `[-1, 0]` (they are negated marginal means).
pub fn grad_e1(s: &Spectrum, prec: u32) -> Result<Vec<BigReal>> {
    validate_prec(prec)?;
    if s.kappa() == 1 {
        let n = s.n();
        return Ok(vec![big(prec, -1.0) / big(prec, n as f64)]);
    }
    bigreal::stabilize(prec, |p| grad_e1_once(s, p), |a: &Vec<_>, b: &Vec<_>, p| {
        bigreal::agree_vec(a, b, p)
    })
}

/// Independent partial-fraction route to `E_1` for spectra with all
/// multiplicities one. Intentionally shares no code with [`eval_e1`].
pub fn partial_fraction_e1(s: &Spectrum, prec: u32) -> Result<BigReal> {
    validate_prec(prec)?;
    if s.mult().iter().any(|&m| m != 1) {
        return Err(Error::Invalid(
            "partial fractions require mutually distinct values".into(),
        ));
    }
    let n = s.n();
    let lambda = s.distinct();
    let mut sum = big(prec, 0.0);
    for (i, li) in lambda.iter().enumerate() {
        let mut li_p = li.clone();
        li_p.set_prec(prec);
        let mut term = (-li_p).exp();
        for (j, lj) in lambda.iter().enumerate() {
            if j != i {
                term /= Float::with_val(prec, lj - li);
            }
        }
        sum += term;
    }
    if sum <= 0 {
        return Err(Error::Unstable(
            "partial-fraction sum lost all significance (nonpositive)".into(),
        ));
    }
    Ok(sum.ln() + ln_factorial(prec, (n - 1) as u32))
}
