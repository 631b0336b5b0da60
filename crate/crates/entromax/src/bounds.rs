//! A priori localization radii for the dual optimum.
//!
//! The dual problem `min_Y <Y, A> + E_k(Y)` over traceless Hermitian `Y`
//! has a minimizer whose norm is controlled by how strictly interior the
//! marginal `A` is: with `η = min_i min(a_i, 1 - a_i)` over the
//! eigenvalues of `A`,
//!
//! ```text
//!   two_param_bound(η, δ)  = log(1/δ) / η                (scalar family)
//!   bound_pk(n, k, η)      = (2 n² / η) log(8 n √k / η)  (sup-norm radius)
//!   bound_convex(d, r, η)  = (2 d / η) log(4 r / η)      (generic bodies)
//! ```
//!
//! The `n²` growth in `bound_pk` balances the two competing terms
//! `x ↦ x² log(4 n √k x)` that arise when trading the distance to the
//! boundary against the measure of a cap near it; only the resulting
//! radius is needed at runtime. The solver confines its search to the box
//! `\|y\|_∞ <= bound_pk(n, k, η)` and certifies the optimum inside it.

use crate::{Error, Result};

/// Interiority margin of a marginal: distance from its eigenvalues to the
/// boundary `{0, 1}` of the admissible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorEstimate {
    pub eta: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Invalid(format!("interiority margin must be positive, got {eta}")));
    }
    Ok(())
}

/// Localization radius for a two-parameter exponential family with
/// interiority `eta` at confidence margin `delta`.
pub fn two_param_bound(eta: f64, delta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((1.0 / delta).ln() / eta)
}

/// Sup-norm localization radius for the rank-`k` projection dual with an
/// `n x n` marginal of interiority `eta`.
pub fn bound_pk(n: usize, k: usize, eta: f64) -> Result<f64> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    check_eta(eta)?;
    let nf = n as f64;
    let arg = 8.0 * nf * (k as f64).sqrt() / eta;
    Ok(2.0 * nf * nf / eta * arg.ln())
}

/// Localization radius for a generic `d`-dimensional convex body of
/// circumradius `r` and interiority `eta`.
pub fn bound_convex(d: usize, r: f64, eta: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Invalid("dimension must be positive".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Invalid(format!("circumradius must be positive, got {r}")));
    }
    check_eta(eta)?;
    Ok(2.0 * d as f64 / eta * (4.0 * r / eta).ln())
}

/// Interiority of a rank-`k` marginal from its eigenvalues: requires
/// `tr A = k` (within `1e-9`) and every eigenvalue strictly inside
/// `(0, 1)`, otherwise the dual optimum need not exist
/// ([`Error::Interior`]).
pub fn eta_estimate_pk(a: &[f64], k: usize) -> Result<InteriorEstimate> {
    if a.is_empty() || k == 0 || k > a.len() {
        return Err(Error::Invalid(format!(
            "need 1 <= k <= n eigenvalues, got k = {k}, n = {}",
            a.len()
        )));
    }
    let trace: f64 = a.iter().sum();
    if (trace - k as f64).abs() > 1e-9 {
        return Err(Error::Interior(format!(
            "marginal trace {trace} does not equal k = {k} (tolerance 1e-9)"
        )));
    }
    let mut eta = f64::INFINITY;
    for (i, &v) in a.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Interior(format!(
                "eigenvalue a[{i}] = {v} is not strictly inside (0, 1)"
            )));
        }
        eta = eta.min(v).min(1.0 - v);
    }
    Ok(InteriorEstimate { eta })
}
