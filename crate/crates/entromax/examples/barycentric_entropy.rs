//! Barycentric entropy of a density matrix.
//!
//! H_b(ρ) is the least relative entropy (with respect to the uniform
//! measure on pure states) among distributions on rank-one projections
//! whose mean is ρ. By strong duality it equals -min_Y [<Y, ρ> + E_1(Y)],
//! so it is computable to any accuracy with the certified dual solver.
//!
//! It vanishes exactly at the barycenter ρ = I/n and diverges as ρ
//! approaches a pure state.

use entromax::matrix::HermitianMatrix;
use entromax::solver::barycentric_entropy;
use entromax::Result;

fn main() -> Result<()> {
    for n in 2..=4usize {
        let rho = HermitianMatrix::from_diag(&vec![1.0 / n as f64; n])?;
        let h = barycentric_entropy(&rho, 1e-8)?;
        println!("H_b(I/{n})              = {h:+.9}");
    }
    println!();

    // Two-level states diag(1 - eta, eta): entropy grows like -log(eta)
    // as the spectrum skews toward purity.
    for eta in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let rho = HermitianMatrix::from_diag(&[1.0 - eta, eta])?;
        let h = barycentric_entropy(&rho, 1e-8)?;
        println!("H_b(diag({:5.3}, {eta:5.3})) = {h:+.9}", 1.0 - eta);
    }
    Ok(())
}
