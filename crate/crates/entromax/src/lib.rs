//! Maximum-entropy distributions on projection manifolds.
//!
//! Given a Hermitian marginal constraint `A` with `0 < A < I` and
//! `tr A = k`, the maximum-entropy (minimum relative entropy) distribution
//! on the manifold of rank-`k` Hermitian projections has density
//! proportional to `exp(-<Y, X>)` for a dual Hermitian matrix `Y`. Finding
//! `Y` means minimizing the smooth convex dual
//!
//! ```text
//!     F_A(Y) = <Y, A> + E_k(Y),      E_k(Y) = log ∫ exp(-<Y, X>) dμ_k(X),
//! ```
//!
//! where `μ_k` is the unitarily invariant probability measure on rank-`k`
//! projections. This crate provides the pieces needed to do that to
//! arbitrary accuracy:
//!
//! * [`rank_one`] and [`rank_k`]: closed-form evaluation of `E_k` and its
//!   gradient through structured determinants, exact up to controlled
//!   arbitrary-precision rounding. No quadrature, no Monte Carlo.
//! * [`solver`]: an ellipsoid method on the traceless diagonal slice with a
//!   certified optimality gap, plus the barycentric entropy built on it.
//! * [`sampler`]: exact sampling of the resulting tilted measure by CDF
//!   inversion of each eigenvalue coordinate.
//! * [`outer`]: the analogous integral on rank-one real outer products
//!   (a Gaussian integral), its closed-form optimum, and Gaussian sampling.
//! * [`mc`]: Monte Carlo reference estimators used to cross-check the
//!   deterministic routes.
//! * [`bounds`]: a priori localization radii for the dual optimum.
//! * [`bigreal`] and [`matrix`]: arbitrary-precision scalars and the
//!   Hermitian eigendecomposition / spectrum clustering layer.
//!
//! # Example
//!
//! ```
//! use entromax::matrix::{cluster_spectrum, DEFAULT_TAU};
//! use entromax::rank_one::eval_e1;
//!
//! // E_1 at Y = diag(1, 0): log(1 - 1/e).
//! let s = cluster_spectrum(&[1.0, 0.0], DEFAULT_TAU).unwrap();
//! let e = eval_e1(&s, 256).unwrap();
//! assert!((e.to_f64() - (1.0 - (-1.0_f64).exp()).ln()).abs() < 1e-12);
//! ```
//!
//! # Precision
//!
//! All determinant evaluations run at a caller-chosen MPFR precision
//! (bits), with an internal doubling retry until two consecutive
//! precisions agree; see [`bigreal`]. The `entromax` binary reads the
//! default from `ENTROMAX_PRECISION` (default 256, minimum 64).

#![forbid(unsafe_code)]

pub mod bigreal;
pub mod bounds;
pub mod io;
mod linalg;
pub mod matrix;
pub mod mc;
pub mod outer;
pub mod rank_k;
pub mod rank_one;
pub mod sampler;
pub mod solver;
pub mod streams;

/// Errors reported by this crate.
///
/// The CLI maps these to process exit codes: `Invalid`, `Io` and `Json`
/// exit 1, `Unstable` exits 2, `Interior` exits 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structurally invalid input: wrong dimensions, violated matrix
    /// invariants, parameters outside their documented domain.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numerical evaluation failed to stabilize: determinant signs came
    /// out wrong, or precision doubling ran out of retries without two
    /// consecutive evaluations agreeing.
    #[error("numerically unstable: {0}")]
    Unstable(String),

    /// The requested marginal is not strictly inside the feasible body
    /// (an eigenvalue of `A` is outside `(0, 1)` or `tr A != k`), so the
    /// dual optimum does not exist or cannot be localized.
    #[error("marginal not strictly interior: {0}")]
    Interior(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the `entromax` binary for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Io(_) | Error::Json(_) => 1,
            Error::Unstable(_) => 2,
            Error::Interior(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
