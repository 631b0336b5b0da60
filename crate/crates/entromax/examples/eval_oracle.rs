//! Evaluate the exponential-integral oracle E_k and its gradient.
//!
//! E_k(Y) = log ∫ e^{-<Y, X>} dμ_k(X) over rank-k projections depends only
//! on the spectrum of Y. This example evaluates the determinant formula on
//! a few spectra, including a confluent one, and checks two exact
//! identities in extended precision:
//!
//!   shift:       E_k(y + c·1) = E_k(y) - c k
//!   complement:  E_{n-k}(y)   = -tr y + E_k(-y)

use entromax::bigreal::{big, DEFAULT_PREC};
use entromax::matrix::{cluster_spectrum, DEFAULT_TAU};
use entromax::rank_k::eval_grad_ek;
use entromax::rank_one::eval_e1;
use entromax::Result;
use rug::Float;

fn main() -> Result<()> {
    let prec = DEFAULT_PREC;
    let spectra: [&[f64]; 3] = [
        &[1.0, 0.5, 0.0],
        &[2.0, 1.0, 1.0, -0.5],
        &[0.3, 0.3, 0.3],
    ];

    for y in spectra {
        let n = y.len();
        let s = cluster_spectrum(y, DEFAULT_TAU)?;
        println!("spectrum {y:?}  (distinct values: {})", s.distinct().len());

        for k in 1..=n {
            let (e, grad) = eval_grad_ek(&s, k, prec)?;
            let cluster_grads: Vec<f64> = grad.iter().map(Float::to_f64).collect();
            println!("  E_{k} = {:14.10}  cluster gradient {cluster_grads:?}", e.to_f64());
        }

        // Shift identity: adding c to every eigenvalue subtracts c k.
        let c = 0.75;
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let k = 1;
        let base = eval_e1(&s, prec)?;
        let moved = eval_e1(&cluster_spectrum(&shifted, DEFAULT_TAU)?, prec)?;
        let mut dev = moved - &base;
        dev += big(prec, c * k as f64);
        println!("  shift identity residual:      {:.3e}", dev.to_f64().abs());

        // Complement identity at rank 1.
        if n > 1 {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let tr: f64 = y.iter().sum();
            let mut rhs = eval_e1(&cluster_spectrum(&neg, DEFAULT_TAU)?, prec)?;
            rhs -= big(prec, tr);
            let (lhs, _) = eval_grad_ek(&s, n - 1, prec)?;
            let mut dev = lhs;
            dev -= &rhs;
            println!("  complement identity residual: {:.3e}", dev.to_f64().abs());
        }
        println!();
    }
    Ok(())
}
