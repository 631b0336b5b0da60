//! Shared oracles and statistics helpers for the acceptance suite.
//!
//! Everything here is deliberately independent of the library internals:
//! the scalar Newton oracle re-derives the two-level optimum from a
//! closed-form one-dimensional reduction, and the KS tail probability is
//! the classical Kolmogorov series with the small-sample correction.

use entromax::bigreal::BigReal;

/// Two-sided Kolmogorov-Smirnov tail probability for statistic `d` at
/// sample size `n`, using the standard finite-sample effective size
/// `sqrt(n) + 0.12 + 0.11/sqrt(n)`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let root = (n as f64).sqrt();
    let t = (root + 0.12 + 0.11 / root) * d;
    let mut q = 0.0f64;
    let mut sign = 1.0f64;
    for j in 1..=200u32 {
        let term = sign * (-2.0 * f64::from(j * j) * t * t).exp();
        q += term;
        if term.abs() < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * q).clamp(0.0, 1.0)
}

/// Independent optimum for the two-level marginal diag(0.7, 0.3) with
/// rank one: restricted to traceless Y = diag(a, -a), the dual objective
/// reduces to the scalar function
///
///   F(a) = 0.4 a + ln(sinh(a) / a),
///
/// whose unique stationary point solves 0.4 + coth(a) - 1/a = 0. Returns
/// `(a_star, f_star)` from a plain f64 Newton iteration.
pub fn two_level_optimum() -> (f64, f64) {
    let fp = |a: f64| 0.4 + a.cosh() / a.sinh() - 1.0 / a;
    let fpp = |a: f64| 1.0 / (a * a) - 1.0 / (a.sinh() * a.sinh());
    let mut a = -1.0f64;
    for _ in 0..80 {
        let step = fp(a) / fpp(a);
        a -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let f = 0.4 * a + (a.sinh() / a).ln();
    (a, f)
}

/// |a - b| collapsed to f64, computed at the operands' precision.
pub fn abs_diff(a: &BigReal, b: &BigReal) -> f64 {
    let mut d = a.clone();
    d -= b;
    d.abs_mut();
    d.to_f64()
}
