//! Exact evaluation of `E_k(Y) = log ∫ exp(-<Y, X>) dμ_k(X)` on rank-`k`
//! Hermitian projections, with gradient.
//!
//! The rank-`k` analogue of the rank-one determinant formula replaces the
//! single exponential row by `k` rows of exponential polynomials: with
//! ascending points `t_i = -λ_i` of multiplicities `m_i` (total `n`),
//!
//! ```text
//!   ∫ exp(-<Y, X>) dμ_k(X)
//!     = (Π_{p=n-k}^{n-1} p! / Π_{p=1}^{k-1} p!)
//!       * det M^(k)(t) / Π_{i<j} (t_j - t_i)^{m_i m_j},
//! ```
//!
//! where block `i` of `M^(k)` has columns `j = 0..m_i-1` with
//!
//! ```text
//!   row r (r = 0..n-k-1):    C(r, j) t_i^(r-j)          (0 when j > r)
//!   row n-k+r (r = 0..k-1):  exp(t_i) q_{r,j}(t_i),
//! ```
//!
//! and `q_{i,j}` is the exponential polynomial
//!
//! ```text
//!   q_{i,j}(t) = Σ_{l=0}^{min(i,j)} C(i, l) t^(i-l) / (j-l)!.
//! ```
//!
//! At `k = 1` the bottom row is `exp(t) q_{0,j}(t) = exp(t)/j!` and the
//! whole expression reduces to the rank-one formula of
//! [`crate::rank_one`]; at `k = n` it collapses to `exp(-tr Y)`.
//! The gradient has the same structure as in rank one:
//!
//! ```text
//!   ∂E_k/∂y_l = -Σ_{i≠p} m_i/(λ_p - λ_i) - det M_p^(k)(t) / det M^(k)(t),
//! ```
//!
//! with `M_p^(k)` differing from `M^(k)` only in the last column of block
//! `p`, which follows the column pattern `j = m_p`. Per-cluster components
//! are negated marginal means, so they lie in `[-1, 0]` and the expanded
//! per-coordinate gradient sums to `-k`.

use rug::Float;

use crate::bigreal::{self, big, binom, ln_factorial, validate_prec, BigReal};
use crate::linalg::det;
use crate::matrix::Spectrum;
use crate::rank_one::{ascending_points, log_vandermonde};
use crate::{Error, Result};

/// `j!` at a precision high enough to be exact.
fn exact_factorial(j: u64) -> BigReal {
    let bits = if j < 2 { 8.0 } else { (j as f64) * (j as f64).log2() + 16.0 };
    let prec = (bits as u32).max(crate::bigreal::MIN_PREC);
    bigreal::factorial(prec, u32::try_from(j).expect("factorial argument fits u32"))
}

/// The exponential polynomial `q_{i,j}` as an exact coefficient table:
/// the coefficient of `t^(i-l)` is the rational `C(i, l) / (j-l)!`,
/// stored as an exact numerator/denominator pair.
#[derive(Debug, Clone)]
pub struct QPolynomial {
    pub i: u64,
    pub j: u64,
    /// `(power, numerator, denominator)` triples; all entries exact.
    terms: Vec<(u64, BigReal, BigReal)>,
}

impl QPolynomial {
    pub fn new(i: u64, j: u64) -> QPolynomial {
        let mut terms = Vec::new();
        for l in 0..=i.min(j) {
            let num = binom(crate::bigreal::MIN_PREC.max(i as u32 + 8), i, l);
            let den = exact_factorial(j - l);
            terms.push((i - l, num, den));
        }
        QPolynomial { i, j, terms }
    }

    /// Evaluates at `t`, rounding to `prec` bits.
    pub fn eval(&self, t: &BigReal, prec: u32) -> BigReal {
        let mut acc = big(prec, 0.0);
        for (pow, num, den) in &self.terms {
            let mut term = big(prec, 1.0);
            for _ in 0..*pow {
                term *= Float::with_val(prec, t);
            }
            term *= Float::with_val(prec, num);
            term /= Float::with_val(prec, den);
            acc += term;
        }
        acc
    }
}

/// Convenience evaluation of `q_{i,j}(t)`.
pub fn q_eval(i: u64, j: u64, t: &BigReal, prec: u32) -> BigReal {
    QPolynomial::new(i, j).eval(t, prec)
}

/// Rank-`k` evaluation matrix `M^(k)` at the spectrum's own distinct
/// values, in their stored (descending) order.
#[derive(Debug, Clone)]
pub struct EvalMatrixK {
    /// Row-major entries; dimension `n x n`.
    pub entries: Vec<Vec<BigReal>>,
    pub k: usize,
}

/// One column of `M^(k)` at point `t` with column index `j`.
fn column_k(
    powers: &[BigReal],
    exp_t: &BigReal,
    t: &BigReal,
    j: u64,
    n: usize,
    k: usize,
    prec: u32,
) -> Vec<BigReal> {
    let mut col = Vec::with_capacity(n);
    for r in 0..(n - k) as u64 {
        if j > r {
            col.push(big(prec, 0.0));
        } else {
            let b = binom(prec, r, j);
            col.push(b * powers[(r - j) as usize].clone());
        }
    }
    for r in 0..k as u64 {
        let q = QPolynomial::new(r, j).eval(t, prec);
        col.push(q * exp_t.clone());
    }
    col
}

fn matrix_k_at_points(
    points: &[BigReal],
    mult: &[usize],
    k: usize,
    replace_block: Option<usize>,
    prec: u32,
) -> Vec<Vec<BigReal>> {
    let n: usize = mult.iter().sum();
    let mut columns: Vec<Vec<BigReal>> = Vec::with_capacity(n);
    for (i, (t, &m)) in points.iter().zip(mult).enumerate() {
        let mut t_prec = t.clone();
        t_prec.set_prec(prec);
        let max_pow = (n - k).saturating_sub(1);
        let mut powers = Vec::with_capacity(max_pow + 1);
        powers.push(big(prec, 1.0));
        for _ in 0..max_pow {
            let last = powers.last().unwrap().clone();
            powers.push(last * &t_prec);
        }
        let exp_t = t_prec.clone().exp();
        for j in 0..m as u64 {
            // In the gradient variant, the last column of the chosen block
            // uses the next column index instead.
            let jj = if replace_block == Some(i) && j == m as u64 - 1 { m as u64 } else { j };
            columns.push(column_k(&powers, &exp_t, &t_prec, jj, n, k, prec));
        }
    }
    (0..n).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect()
}

fn validate_k(s: &Spectrum, k: usize) -> Result<()> {
    if k == 0 || k > s.n() {
        return Err(Error::Invalid(format!(
            "rank k = {k} outside 1..={} for a spectrum of dimension {0}",
            s.n()
        )));
    }
    Ok(())
}

/// Public rank-`k` evaluation matrix for inspection and tests.
pub fn build_eval_matrix_k(s: &Spectrum, k: usize, prec: u32) -> Result<EvalMatrixK> {
    validate_prec(prec)?;
    validate_k(s, k)?;
    Ok(EvalMatrixK {
        entries: matrix_k_at_points(s.distinct(), s.mult(), k, None, prec),
        k,
    })
}

/// `Σ_{p=n-k}^{n-1} log p! - Σ_{p=1}^{k-1} log p!`.
fn log_prefactor(n: usize, k: usize, prec: u32) -> BigReal {
    let mut acc = big(prec, 0.0);
    for p in (n - k)..n {
        acc += ln_factorial(prec, p as u32);
    }
    for p in 1..k {
        acc -= ln_factorial(prec, p as u32);
    }
    acc
}

fn eval_ek_once(s: &Spectrum, k: usize, prec: u32) -> Result<BigReal> {
    let n = s.n();
    let t = ascending_points(s, prec);
    let m = matrix_k_at_points(&t, s.mult(), k, None, prec);
    let d = det(m, prec);
    if d <= 0 {
        return Err(Error::Unstable(format!(
            "rank-{k} evaluation determinant came out nonpositive ({}) at {prec} bits",
            d.to_f64()
        )));
    }
    let mut e = d.ln();
    e += log_prefactor(n, k, prec);
    e -= log_vandermonde(&t, s.mult(), prec)?;
    Ok(e)
}

/// `E_k(Y)` for `Y` with the given spectrum.
pub fn eval_ek(s: &Spectrum, k: usize, prec: u32) -> Result<BigReal> {
    validate_prec(prec)?;
    validate_k(s, k)?;
    if k == s.n() {
        // The measure concentrates on X = I: the integral is exp(-tr Y).
        let mut e = -s.trace();
        e.set_prec(prec);
        return Ok(e);
    }
    if s.kappa() == 1 {
        // Y = c I: the integrand is constant exp(-c k).
        let mut e = -s.distinct()[0].clone() * big(prec, k as f64);
        e.set_prec(prec);
        return Ok(e);
    }
    bigreal::stabilize(prec, |p| eval_ek_once(s, k, p), bigreal::agree_scalar)
}

fn grad_ek_once(s: &Spectrum, k: usize, prec: u32) -> Result<Vec<BigReal>> {
    let t = ascending_points(s, prec);
    let lambda = s.distinct();
    let mult = s.mult();
    let d = det(matrix_k_at_points(&t, mult, k, None, prec), prec);
    if d <= 0 {
        return Err(Error::Unstable(format!(
            "rank-{k} evaluation determinant came out nonpositive ({}) at {prec} bits",
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
        let dp = det(matrix_k_at_points(&t, mult, k, Some(p), prec), prec);
        g -= dp / d.clone();
        out.push(g);
    }
    Ok(out)
}

/// Gradient of `E_k` with respect to the distinct values: entry `p` is
/// `∂E_k/∂y_l` for any coordinate `l` in cluster `p`. Components lie in
/// `[-1, 0]`; the per-coordinate expansion sums to `-k`.
pub fn grad_ek(s: &Spectrum, k: usize, prec: u32) -> Result<Vec<BigReal>> {
    validate_prec(prec)?;
    validate_k(s, k)?;
    if k == s.n() {
        return Ok(vec![big(prec, -1.0); s.kappa()]);
    }
    if s.kappa() == 1 {
        return Ok(vec![big(prec, -(k as f64)) / big(prec, s.n() as f64)]);
    }
    bigreal::stabilize(prec, |p| grad_ek_once(s, k, p), |a: &Vec<_>, b: &Vec<_>, p| {
        bigreal::agree_vec(a, b, p)
    })
}

/// Value and per-cluster gradient together (shares the short-circuit
/// logic; the two determinant families are evaluated at one precision
/// sweep each).
pub fn eval_grad_ek(s: &Spectrum, k: usize, prec: u32) -> Result<(BigReal, Vec<BigReal>)> {
    Ok((eval_ek(s, k, prec)?, grad_ek(s, k, prec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigreal::parse_decimal;
    use crate::matrix::{cluster_spectrum, DEFAULT_TAU};
    use crate::rank_one::{eval_e1, grad_e1};
    use proptest::prelude::*;

    const PREC: u32 = 256;
    const FROZEN_TOL: f64 = 1e-36;

    fn spectrum(y: &[f64]) -> Spectrum {
        cluster_spectrum(y, DEFAULT_TAU).unwrap()
    }

    #[test]
    fn q_polynomial_closed_forms() {
        let t = big(PREC, 0.37);
        // q_{i,0}(t) = t^i.
        for i in 0..5u64 {
            let q = q_eval(i, 0, &t, PREC);
            let expect = big(PREC, 0.37f64.powi(i as i32));
            assert!((q.to_f64() - expect.to_f64()).abs() < 1e-15, "i = {i}");
        }
        // q_{1,1}(t) = t + 1.
        let q11 = q_eval(1, 1, &t, PREC);
        assert!((q11.to_f64() - 1.37).abs() < 1e-15);
        // q_{i,j}(0) = 1/(j-i)! for j >= i, else 0.
        let zero = big(PREC, 0.0);
        assert!((q_eval(2, 4, &zero, PREC).to_f64() - 0.5).abs() < 1e-16);
        assert_eq!(q_eval(3, 1, &zero, PREC).to_f64(), 0.0);
    }

    #[test]
    fn rank_one_bottom_row_matches_rank_one_module() {
        // At k = 1 the bottom row entries are exp(t)/j!.
        let s = Spectrum::new(vec![0.8], vec![3]).unwrap();
        let m = build_eval_matrix_k(&s, 1, PREC).unwrap();
        let e = 0.8f64.exp();
        assert!((m.entries[2][0].to_f64() - e).abs() < 1e-14);
        assert!((m.entries[2][1].to_f64() - e).abs() < 1e-14);
        assert!((m.entries[2][2].to_f64() - e / 2.0).abs() < 1e-14);
    }

    #[test]
    fn normalization_via_determinant_path() {
        for n in [2usize, 3, 5, 8] {
            for k in 1..n {
                let s = spectrum(&vec![0.0; n]);
                let e = eval_ek_once(&s, k, PREC).unwrap();
                assert!(e.to_f64().abs() < 1e-60, "n = {n}, k = {k}: {e}");
            }
        }
    }

    #[test]
    fn reduces_to_rank_one() {
        for y in [vec![1.7, 0.2, -0.6], vec![1.0, 1.0, 0.0], vec![2.0, 0.5, 0.5, -1.0]] {
            let s = spectrum(&y);
            let a = eval_ek(&s, 1, PREC).unwrap();
            let b = eval_e1(&s, PREC).unwrap();
            let diff = Float::with_val(PREC, &a - &b).abs().to_f64();
            assert!(diff < 1e-50, "value mismatch for {y:?}");
            let ga = grad_ek(&s, 1, PREC).unwrap();
            let gb = grad_e1(&s, PREC).unwrap();
            for (x, y) in ga.iter().zip(&gb) {
                assert!(Float::with_val(PREC, x - y).abs().to_f64() < 1e-50);
            }
        }
    }

    #[test]
    fn frozen_value_k2_via_direct_evaluation() {
        // Independently frozen from the complement of the rank-one value.
        let s = spectrum(&[1.0, 0.5, 0.0]);
        let e = eval_ek(&s, 2, PREC).unwrap();
        let expect = parse_decimal("-0.979209898014486524954817757380647767114148", PREC).unwrap();
        let diff = Float::with_val(PREC, &e - &expect).abs().to_f64();
        assert!(diff < FROZEN_TOL, "E_2 = {e}");
    }

    #[test]
    fn complement_identity() {
        // E_{n-k}(Y) = -tr Y + E_k(-Y).
        for (y, k) in [
            (vec![1.0, 0.5, 0.0], 1usize),
            (vec![2.0, -0.3, -0.3, 1.1], 1),
            (vec![2.0, -0.3, -0.3, 1.1], 3),
            (vec![0.9, 0.9, 0.1, -0.2, -1.5], 2),
        ] {
            let s = spectrum(&y);
            let n = s.n();
            let lhs = eval_ek(&s, n - k, PREC).unwrap();
            let rhs = eval_ek(&s.negated(), k, PREC).unwrap() - s.trace();
            let diff = Float::with_val(PREC, &lhs - &rhs).abs().to_f64();
            assert!(diff < 1e-50, "y = {y:?}, k = {k}: {diff:.3e}");
        }
    }

    #[test]
    fn full_rank_is_exponential_of_trace() {
        let s = spectrum(&[1.3, 0.4, -0.2]);
        let e = eval_ek(&s, 3, PREC).unwrap();
        assert!((e.to_f64() + 1.5).abs() < 1e-60);
        // The determinant route agrees even though the shortcut bypasses it.
        let e_det = eval_ek_once(&s, 3, PREC).unwrap();
        assert!((e_det.to_f64() + 1.5).abs() < 1e-60);
        let g = grad_ek(&s, 3, PREC).unwrap();
        assert!(g.iter().all(|v| (v.to_f64() + 1.0).abs() < 1e-60));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let y = [1.2, 0.3, -0.4, -1.0];
        let k = 2;
        let s = spectrum(&y);
        let g = grad_ek(&s, k, PREC).unwrap();
        let h = 1e-6;
        for (p, gp) in g.iter().enumerate() {
            let mut up = y.to_vec();
            let mut dn = y.to_vec();
            up[p] += h;
            dn[p] -= h;
            let ep = eval_ek(&spectrum(&up), k, PREC).unwrap().to_f64();
            let em = eval_ek(&spectrum(&dn), k, PREC).unwrap().to_f64();
            let fd = (ep - em) / (2.0 * h);
            assert!(
                (gp.to_f64() - fd).abs() < 1e-8,
                "cluster {p}: analytic {} vs fd {fd}",
                gp.to_f64()
            );
        }
    }

    #[test]
    fn rejects_out_of_range_rank() {
        let s = spectrum(&[1.0, 0.0]);
        assert!(eval_ek(&s, 0, PREC).is_err());
        assert!(eval_ek(&s, 3, PREC).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shift_and_gradient_sum(
            y in proptest::collection::vec(-2.5f64..2.5, 2..6),
            k in 1usize..4,
            c in -1.5f64..1.5,
        ) {
            let s = spectrum(&y);
            prop_assume!(k <= s.n());
            let e = eval_ek(&s, k, 128).unwrap();
            let es = eval_ek(&s.shifted(c), k, 128).unwrap();
            let ck = big(256, c) * big(256, k as f64);
            let shift_err = (Float::with_val(256, &es - &e) + ck).abs().to_f64();
            prop_assert!(shift_err < 1e-16, "shift identity violated by {shift_err:.3e}");

            let g = grad_ek(&s, k, 128).unwrap();
            let per_coord = s.expand(&g).unwrap();
            let mut sum = big(256, 0.0);
            for v in &per_coord {
                prop_assert!(v.to_f64() <= 1e-12 && v.to_f64() >= -1.0 - 1e-12);
                sum += v;
            }
            prop_assert!((sum.to_f64() + k as f64).abs() < 1e-15);
        }

        #[test]
        fn complement_identity_random(
            y in proptest::collection::vec(-2.0f64..2.0, 2..6),
            k in 1usize..5,
        ) {
            let s = spectrum(&y);
            let n = s.n();
            prop_assume!(k < n);
            let lhs = eval_ek(&s, n - k, 128).unwrap();
            let rhs = eval_ek(&s.negated(), k, 128).unwrap() - s.trace();
            let diff = Float::with_val(256, &lhs - &rhs).abs().to_f64();
            prop_assert!(diff < 1e-15);
        }
    }
}
