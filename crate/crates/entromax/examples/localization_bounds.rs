//! A-priori localization radii for the dual optimizer.
//!
//! The dual minimizer Y° of <Y, A> + E_k(Y) exists whenever the marginal
//! A is strictly interior, and its norm is bounded in terms of the
//! interiority margin η alone:
//!
//!   two_param_bound   log-mass lower bound radius ln(1/δ)/η
//!   bound_pk          ‖Y°‖ ≤ (2 n²/η) ln(8 n √k / η) on rank-k projections
//!   bound_convex      generic convex-body version from the circumradius
//!
//! These radii feed the solver's initial ellipsoid, so they directly set
//! the number of cuts needed for a target gap.

use entromax::bounds::{bound_convex, bound_pk, eta_estimate_pk, two_param_bound};
use entromax::Result;

fn main() -> Result<()> {
    // Interiority of a few rank-1 marginals (eigenvalues sum to 1).
    for a in [vec![0.5, 0.3, 0.2], vec![0.9, 0.05, 0.05], vec![0.98, 0.01, 0.01]] {
        let eta = eta_estimate_pk(&a, 1)?.eta;
        let r = bound_pk(a.len(), 1, eta)?;
        println!("marginal {a:?}: eta = {eta:.3}, localization radius {r:10.1}");
    }
    println!();

    // The radius scales like (n^2/eta) log(n/eta): mild in n, harsh in eta.
    println!("  n    k    eta      bound_pk      bound_convex   two_param(delta=1e-6)");
    for (n, k, eta) in [(2usize, 1usize, 0.3), (4, 2, 0.1), (8, 4, 0.1), (16, 4, 0.01)] {
        let r_pk = bound_pk(n, k, eta)?;
        let r_cx = bound_convex(n - 1, (k as f64).sqrt(), eta)?;
        let r_2p = two_param_bound(eta, 1e-6)?;
        println!("  {n:2}   {k:2}   {eta:5.3}  {r_pk:12.1}  {r_cx:12.1}   {r_2p:12.1}");
    }
    Ok(())
}
