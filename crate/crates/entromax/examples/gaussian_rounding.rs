//! Maximum entropy on rank-one outer products and Gaussian rounding.
//!
//! On the manifold V₁ = {v vᵀ} with Lebesgue base measure, the dual
//! objective <Y, A> + E_{V1}(Y) has the closed-form minimizer
//! Y* = (1/2) A^{-1}, and the max-entropy distribution with marginal
//! E[v vᵀ] = A is exactly the Gaussian N(0, A): the distribution used by
//! randomized SDP rounding. E_{V1}(Y) = (n/2) log π - (1/2) log det Y is
//! finite precisely when Y is positive definite.

use entromax::outer::{
    eval_ev1, gw_optimum, gw_sample, projected_density_ratio, Ev1, SymmetricMatrix, SymmetricPD,
};
use entromax::streams::stream_rng;
use entromax::Result;

fn main() -> Result<()> {
    let prec = 256;
    let a = SymmetricPD::new(SymmetricMatrix::from_rows(&[
        vec![2.0, 0.6, 0.0],
        vec![0.6, 1.5, -0.4],
        vec![0.0, -0.4, 1.0],
    ])?)?;

    let y = gw_optimum(&a)?;
    println!("optimal tilt Y* = (1/2) A^-1:");
    for i in 0..3 {
        let row: Vec<f64> = (0..3).map(|j| y.data()[(i, j)]).collect();
        println!("  {row:?}");
    }

    match eval_ev1(a.matrix(), prec)? {
        Ev1::Finite(e) => println!("\nE_V1(A) = {:.12}", e.to_f64()),
        Ev1::Infinite => unreachable!("A is positive definite"),
    }
    let indefinite = SymmetricMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]])?;
    println!("E_V1(diag(1, -1)) is {:?}", eval_ev1(&indefinite, prec)?);

    // Sampling the optimal distribution and checking the second moment.
    let mut rng = stream_rng(11, 0);
    let n_samples = 200_000usize;
    let mut second = [[0.0f64; 3]; 3];
    for _ in 0..n_samples {
        let v = gw_sample(&a, &mut rng);
        for i in 0..3 {
            for j in 0..3 {
                second[i][j] += v[i] * v[j];
            }
        }
    }
    println!("\nempirical E[v vT] vs A:");
    for i in 0..3 {
        for j in 0..3 {
            let emp = second[i][j] / n_samples as f64;
            print!("  {emp:7.4} ({:7.4})", a.data()[(i, j)]);
        }
        println!();
    }

    // Density ratio between two projected directions, in extended
    // precision: useful when <A, v vT>^n under- or overflows f64.
    let e1 = [1.0, 0.0, 0.0];
    let q = 1.0 / 3.0f64.sqrt();
    let diag = [q, q, q];
    let ratio = projected_density_ratio(&a, &e1, &diag, prec)?;
    println!("\ndensity ratio along e1 vs (1,1,1)/sqrt(3): {:.6}", ratio.to_f64());
    Ok(())
}
