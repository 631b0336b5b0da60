//! Arbitrary-precision scalars and the precision-doubling evaluation driver.
//!
//! Every quantity that feeds a determinant or a log goes through
//! [`BigReal`], an MPFR-backed floating-point value whose precision (in
//! bits) travels with it. Promotion from `f64` is exact at any precision
//! accepted here, so `f64` inputs lose nothing on entry.
//!
//! The evaluation protocol for the oracles is [`stabilize`]: evaluate at
//! the requested precision `p` and at `2p`, accept the `2p` result when
//! the two agree to a relative `2^(-p/2)`, otherwise double and retry up
//! to [`MAX_ESCALATIONS`] times before reporting [`Error::Unstable`].
//!
//! Decimal formatting keeps `ceil(p * log10(2)) + 2` significant digits so
//! that serialized values round-trip through JSON without precision loss.

use rug::float::ParseFloatError;
use rug::ops::CompleteRound;
use rug::Float;

use crate::{Error, Result};

/// Arbitrary-precision real number (MPFR). The precision in bits is a
/// property of each value; arithmetic rounds to the precision of the
/// destination.
pub type BigReal = Float;

/// Default working precision in bits.
pub const DEFAULT_PREC: u32 = 256;

/// Smallest precision accepted anywhere in this crate.
pub const MIN_PREC: u32 = 64;

/// Maximum number of precision doublings before giving up.
pub const MAX_ESCALATIONS: u32 = 4;

/// Checks that `prec` is at least [`MIN_PREC`].
pub fn validate_prec(prec: u32) -> Result<()> {
    if prec < MIN_PREC {
        return Err(Error::Invalid(format!(
            "precision {prec} below minimum {MIN_PREC}"
        )));
    }
    Ok(())
}

/// Promotes an `f64` to a [`BigReal`] of precision `prec`. Exact, since
/// `prec >= 64 > 53`.
pub fn big(prec: u32, x: f64) -> BigReal {
    Float::with_val(prec, x)
}

/// `n!` as a [`BigReal`]. Exact whenever `n!` fits in `prec` bits.
pub fn factorial(prec: u32, n: u32) -> BigReal {
    Float::factorial(n).complete(prec)
}

/// `log(n!)` evaluated with enough guard bits that the result is accurate
/// to the destination precision.
pub fn ln_factorial(prec: u32, n: u32) -> BigReal {
    if n <= 1 {
        return Float::with_val(prec, 0);
    }
    let f = Float::factorial(n).complete(prec + 64);
    let mut l = f.ln();
    l.set_prec(prec);
    l
}

fn binom_u128(r: u64, j: u64) -> Option<u128> {
    if j > r {
        return Some(0);
    }
    let j = j.min(r - j);
    let mut acc: u128 = 1;
    for t in 1..=j {
        // acc * (r - j + t) / t is C(r - j + t, t), integral at each step.
        acc = acc.checked_mul(u128::from(r - j + t))?;
        acc /= u128::from(t);
    }
    Some(acc)
}

/// Binomial coefficient `C(r, j)` as an exact [`BigReal`].
///
/// Uses `u128` arithmetic when it fits and an exact Pascal recursion in
/// `BigReal` (integer additions below `2^r`) otherwise.
pub fn binom(prec: u32, r: u64, j: u64) -> BigReal {
    if let Some(v) = binom_u128(r, j) {
        return Float::with_val(prec, v);
    }
    // Pascal's triangle: all entries are integers < 2^r, so additions are
    // exact once the working precision exceeds r bits.
    let work = prec.max(u32::try_from(r).unwrap_or(u32::MAX).saturating_add(8));
    let j = j.min(r - j) as usize;
    let mut row: Vec<BigReal> = vec![Float::with_val(work, 1)];
    for _ in 0..r {
        let mut next = vec![Float::with_val(work, 1)];
        for c in 1..=j.min(row.len()) {
            let left = row.get(c - 1).cloned().unwrap_or_else(|| Float::with_val(work, 0));
            let here = row.get(c).cloned().unwrap_or_else(|| Float::with_val(work, 0));
            next.push(left + here);
        }
        row = next;
    }
    let mut out = row.into_iter().nth(j).unwrap_or_else(|| Float::with_val(work, 0));
    out.set_prec(prec);
    out
}

/// Number of significant decimal digits needed to round-trip `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    (f64::from(prec) * std::f64::consts::LOG10_2).ceil() as usize + 2
}

/// Formats a finite [`BigReal`] as a decimal string that is also a valid
/// JSON number token (optional sign, digits, optional fraction, optional
/// `e` exponent).
pub fn format_decimal(x: &BigReal) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Unstable(format!("non-finite value {x} cannot be serialized")));
    }
    let digits = decimal_digits(x.prec());
    let s = x.to_string_radix(10, Some(digits));
    // rug renders e.g. "-4.586e-1" or "0.0000"; both are valid JSON numbers.
    Ok(s)
}

/// Parses a decimal string into a [`BigReal`] of precision `prec`.
pub fn parse_decimal(s: &str, prec: u32) -> Result<BigReal> {
    validate_prec(prec)?;
    let parsed = Float::parse(s)
        .map_err(|e: ParseFloatError| Error::Invalid(format!("bad decimal literal {s:?}: {e}")))?;
    let v = Float::with_val(prec, parsed);
    if !v.is_finite() {
        return Err(Error::Invalid(format!("decimal literal {s:?} is not finite")));
    }
    Ok(v)
}

/// Relative agreement test at `2^(-p/2)`: `|a - b| <= 2^(-p/2) * max(1, |a|, |b|)`.
pub(crate) fn agree_scalar(a: &BigReal, b: &BigReal, p: u32) -> bool {
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    let work = a.prec().max(b.prec()).max(MIN_PREC);
    let diff = Float::with_val(work, a - b).abs();
    let mut scale = Float::with_val(work, 1);
    let aa = a.clone().abs();
    let bb = b.clone().abs();
    if aa > scale {
        scale = aa;
    }
    if bb > scale {
        scale = bb;
    }
    diff <= scale >> (p / 2)
}

/// Componentwise [`agree_scalar`] for vectors of equal length.
pub(crate) fn agree_vec(a: &[BigReal], b: &[BigReal], p: u32) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| agree_scalar(x, y, p))
}

/// Precision-doubling driver.
///
/// Evaluates `eval` at `base_prec` and `2 * base_prec`; if the results
/// `agree` (at the tolerance keyed to `base_prec`) the higher-precision
/// result is returned. Otherwise the pair shifts up a doubling, at most
/// [`MAX_ESCALATIONS`] times.
pub(crate) fn stabilize<T, F, A>(base_prec: u32, mut eval: F, agree: A) -> Result<T>
where
    T: std::fmt::Debug,
    F: FnMut(u32) -> Result<T>,
    A: Fn(&T, &T, u32) -> bool,
{
    validate_prec(base_prec)?;
    let mut prec = base_prec;
    let mut prev = eval(prec)?;
    for _ in 0..=MAX_ESCALATIONS {
        let next = eval(prec * 2)?;
        if agree(&prev, &next, base_prec) {
            return Ok(next);
        }
        prev = next;
        prec *= 2;
    }
    Err(Error::Unstable(format!(
        "no agreement after {MAX_ESCALATIONS} precision doublings from {base_prec} bits; last estimate {prev:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-15;

    #[test]
    fn factorials_are_exact() {
        assert_eq!(factorial(128, 0).to_f64(), 1.0);
        assert_eq!(factorial(128, 5).to_f64(), 120.0);
        assert_eq!(factorial(256, 20).to_f64(), 2.43290200817664e18);
    }

    #[test]
    fn ln_factorial_matches_direct_log() {
        for n in [2u32, 7, 19, 60] {
            let direct = factorial(512, n).ln();
            let viaf = ln_factorial(256, n);
            let diff = Float::with_val(512, &direct - &viaf).abs();
            assert!(diff.to_f64() < 1e-60, "n = {n}");
        }
    }

    #[test]
    fn binomials_match_pascal_identity() {
        for r in 0..40u64 {
            for j in 0..=r {
                let lhs = binom(128, r + 1, j + 1);
                let rhs = binom(128, r, j) + binom(128, r, j + 1);
                assert_eq!(lhs, rhs, "r = {r}, j = {j}");
            }
        }
        assert_eq!(binom(128, 6, 2).to_f64(), 15.0);
        assert_eq!(binom(128, 10, 0).to_f64(), 1.0);
        assert_eq!(binom(128, 3, 7).to_f64(), 0.0);
    }

    #[test]
    fn huge_binomial_falls_back_exactly() {
        // C(200, 100) overflows u128; the Pascal fallback must agree with
        // the multiplicative formula evaluated in wide floats.
        let v = binom(512, 200, 100);
        let mut acc = Float::with_val(512, 1);
        for t in 1..=100u32 {
            acc *= Float::with_val(512, 100 + t);
            acc /= Float::with_val(512, t);
        }
        let rel = Float::with_val(512, &v - &acc).abs() / acc;
        assert!(rel.to_f64() < 1e-100);
    }

    #[test]
    fn decimal_round_trip_preserves_value() {
        let x = big(256, std::f64::consts::PI).sqrt();
        let s = format_decimal(&x).unwrap();
        let y = parse_decimal(&s, 256).unwrap();
        let rel = Float::with_val(256, &x - &y).abs() / x.clone();
        assert!(rel.to_f64() < 2f64.powi(-250));
        // The token must parse as a JSON number.
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!((v.as_f64().unwrap() - x.to_f64()).abs() < TOL);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_decimal("not-a-number", 128).is_err());
        assert!(parse_decimal("1.5", 32).is_err());
    }

    #[test]
    fn stabilize_accepts_stable_and_rejects_noise() {
        let stable = stabilize(64, |p| Ok(big(p, 2.0).sqrt()), agree_scalar).unwrap();
        assert!((stable.to_f64() - std::f64::consts::SQRT_2).abs() < TOL);

        let mut calls = 0;
        let noisy: Result<BigReal> = stabilize(
            64,
            |p| {
                calls += 1;
                Ok(big(p, f64::from(calls)))
            },
            agree_scalar,
        );
        assert!(matches!(noisy, Err(Error::Unstable(_))));
        assert_eq!(calls, MAX_ESCALATIONS + 1 + 1);
    }

    #[test]
    fn agreement_scales_with_magnitude() {
        let a = big(128, 1e30);
        let b = a.clone() + big(128, 1.0);
        assert!(agree_scalar(&a, &b, 64));
        let c = big(128, 1.0);
        let d = big(128, 1.0 + 1e-6);
        assert!(!agree_scalar(&c, &d, 64));
    }
}
