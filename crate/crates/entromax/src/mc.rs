//! Monte Carlo reference estimators for the projection-manifold
//! integrals.
//!
//! These estimators exist to cross-check the deterministic determinant
//! oracles through an entirely independent route: sample uniform rank-`k`
//! projections (Haar), average `exp(-<Y, X>)` for [`mc_estimate_ek`], or
//! the importance-weighted projection itself for [`mc_marginal`], which
//! converges to the mean of the `exp(-<Y, X>)`-tilted distribution, i.e.
//! to `-∇E_k(Y)` on the diagonal.
//!
//! A uniform rank-`k` projection is built from `k` i.i.d. complex
//! Gaussian vectors via modified Gram-Schmidt with one re-orthogonalization
//! pass: `X = P* P` for the resulting orthonormal rows `P`.
//!
//! Estimates are averaged over ChaCha streams `0..N` of a caller seed,
//! chunked so the reduction order is fixed: results are bit-identical for
//! any number of worker threads. Weight accumulation switches from `f64`
//! to [`BigReal`] when `||Y||_∞ > 30` (or whenever `k ||Y||_∞` could
//! overflow the `f64` exponent range), so extreme tilts lose no mass.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::bigreal::{big, BigReal};
use crate::matrix::HermitianMatrix;
use crate::streams::stream_rng;
use crate::{Error, Result};

/// Samples per work chunk; fixed so the reduction tree is deterministic.
const CHUNK: u64 = 4096;

/// Weight accumulation precision on the [`BigReal`] path.
const ACC_PREC: u32 = 160;

/// Monte Carlo estimate of `exp(E_k(Y))` with its standard error.
#[derive(Debug, Clone)]
pub struct MCEstimate {
    pub mean: BigReal,
    pub stderr: BigReal,
    pub n_samples: u64,
}

impl MCEstimate {
    pub fn mean_f64(&self) -> f64 {
        self.mean.to_f64()
    }

    pub fn stderr_f64(&self) -> f64 {
        self.stderr.to_f64()
    }
}

/// Importance-weighted estimate of the tilted mean projection, with
/// batch-means standard errors for the diagonal.
#[derive(Debug, Clone)]
pub struct McMarginal {
    pub matrix: HermitianMatrix,
    pub diag_stderr: Vec<f64>,
    pub n_samples: u64,
}

fn validate_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// `k` orthonormal rows in `C^n` from i.i.d. complex Gaussians, by
/// modified Gram-Schmidt with a second orthogonalization pass.
fn orthonormal_rows(n: usize, k: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<Complex64>> {
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| {
                Complex64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))
            })
            .collect();
        for _pass in 0..2 {
            for u in &rows {
                let proj: Complex64 =
                    u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            // Degenerate draw; take a fresh vector.
            continue;
        }
        for z in &mut v {
            *z /= norm;
        }
        rows.push(v);
    }
    rows
}

/// One uniform rank-`k` projection `X = P* P`.
pub fn sample_uniform_pk(n: usize, k: usize, rng: &mut ChaCha12Rng) -> Result<HermitianMatrix> {
    validate_nk(n, k)?;
    let rows = orthonormal_rows(n, k, rng);
    let mut x = DMatrix::<Complex64>::zeros(n, n);
    for row in &rows {
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] += row[i].conj() * row[j];
            }
        }
    }
    HermitianMatrix::new(x)
}

/// Diagonal of a uniform rank-`k` projection (cheaper than the full
/// matrix when only `<diag(y), X>` is needed).
fn sample_diag_pk(n: usize, k: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let rows = orthonormal_rows(n, k, rng);
    let mut d = vec![0.0; n];
    for row in &rows {
        for (di, z) in d.iter_mut().zip(row) {
            *di += z.norm_sqr();
        }
    }
    d
}

fn validate_y(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Invalid("empty diagonal".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("diagonal must be finite".into()));
    }
    Ok(())
}

fn chunk_ranges(n_samples: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut lo = 0;
    while lo < n_samples {
        let hi = (lo + CHUNK).min(n_samples);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

/// Monte Carlo mean and standard error of `exp(-<Y, X>)` over `n_samples`
/// uniform rank-`k` projections, `Y = diag(y)`. Deterministic in
/// `(y, k, n_samples, seed)`.
pub fn mc_estimate_ek(y: &[f64], k: usize, n_samples: u64, seed: u64) -> Result<MCEstimate> {
    validate_y(y)?;
    let n = y.len();
    validate_nk(n, k)?;
    if n_samples < 2 {
        return Err(Error::Invalid("need at least 2 samples".into()));
    }
    let y_max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Shift the exponent to its value at the flat marginal k/n * I; the
    // shift is undone exactly at the end.
    let shift = (k as f64 / n as f64) * y.iter().sum::<f64>();
    let use_big = y_max > 30.0 || (k as f64) * y_max > 300.0;

    let nf = n_samples as f64;
    let (mean_s, stderr_s) = if use_big {
        let partials: Vec<(BigReal, BigReal)> = chunk_ranges(n_samples)
            .par_iter()
            .map(|&(lo, hi)| {
                let mut sum = big(ACC_PREC, 0.0);
                let mut sum2 = big(ACC_PREC, 0.0);
                for idx in lo..hi {
                    let mut rng = stream_rng(seed, idx);
                    let d = sample_diag_pk(n, k, &mut rng);
                    let expo: f64 = shift - y.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
                    let w = big(ACC_PREC, expo).exp();
                    sum += &w;
                    sum2 += w.square();
                }
                (sum, sum2)
            })
            .collect();
        let mut sum = big(ACC_PREC, 0.0);
        let mut sum2 = big(ACC_PREC, 0.0);
        for (a, b) in partials {
            sum += a;
            sum2 += b;
        }
        let mean = sum / big(ACC_PREC, nf);
        let mut var = sum2 / big(ACC_PREC, nf) - mean.clone().square();
        if var < 0 {
            var = big(ACC_PREC, 0.0);
        }
        let stderr = (var / big(ACC_PREC, nf - 1.0)).sqrt();
        (mean, stderr)
    } else {
        let partials: Vec<(f64, f64)> = chunk_ranges(n_samples)
            .par_iter()
            .map(|&(lo, hi)| {
                let mut sum = 0.0f64;
                let mut sum2 = 0.0f64;
                for idx in lo..hi {
                    let mut rng = stream_rng(seed, idx);
                    let d = sample_diag_pk(n, k, &mut rng);
                    let expo: f64 = shift - y.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
                    let w = expo.exp();
                    sum += w;
                    sum2 += w * w;
                }
                (sum, sum2)
            })
            .collect();
        let (sum, sum2) = partials.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
        let mean = sum / nf;
        let var = (sum2 / nf - mean * mean).max(0.0);
        let stderr = (var / (nf - 1.0)).sqrt();
        (big(ACC_PREC, mean), big(ACC_PREC, stderr))
    };

    // Undo the shift in BigReal so huge factors cannot overflow.
    let factor = big(ACC_PREC, -shift).exp();
    Ok(MCEstimate {
        mean: mean_s * factor.clone(),
        stderr: stderr_s * factor,
        n_samples,
    })
}

/// Importance-weighted Monte Carlo estimate of the mean projection under
/// the `exp(-<Y, X>)`-tilted distribution: `Σ w_s X_s / Σ w_s`. The
/// diagonal converges to `-∇E_k(Y)`; per-coordinate standard errors come
/// from batch means over sample chunks.
pub fn mc_marginal(y: &[f64], k: usize, n_samples: u64, seed: u64) -> Result<McMarginal> {
    validate_y(y)?;
    let n = y.len();
    validate_nk(n, k)?;
    if n_samples < 16 {
        return Err(Error::Invalid("need at least 16 samples".into()));
    }
    let spread: f64 = {
        let mx = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = y.iter().cloned().fold(f64::INFINITY, f64::min);
        (mx - mn) * k as f64
    };
    if spread > 600.0 {
        return Err(Error::Invalid(format!(
            "tilt dynamic range exp({spread:.0}) exceeds the marginal estimator's domain"
        )));
    }
    let shift = (k as f64 / n as f64) * y.iter().sum::<f64>();

    struct Part {
        w: f64,
        wx: DMatrix<Complex64>,
        wd: Vec<f64>,
    }
    let partials: Vec<Part> = chunk_ranges(n_samples)
        .par_iter()
        .map(|&(lo, hi)| {
            let mut w_sum = 0.0f64;
            let mut wx = DMatrix::<Complex64>::zeros(n, n);
            let mut wd = vec![0.0f64; n];
            for idx in lo..hi {
                let mut rng = stream_rng(seed, idx);
                let x = sample_uniform_pk(n, k, &mut rng).expect("validated dims");
                let d = x.diag();
                let expo: f64 = shift - y.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
                let w = expo.exp();
                w_sum += w;
                for i in 0..n {
                    for j in 0..n {
                        wx[(i, j)] += x.entry(i, j) * w;
                    }
                }
                for i in 0..n {
                    wd[i] += w * d[i];
                }
            }
            Part { w: w_sum, wx, wd }
        })
        .collect();

    let mut w_total = 0.0;
    let mut wx_total = DMatrix::<Complex64>::zeros(n, n);
    for p in &partials {
        w_total += p.w;
        wx_total += &p.wx;
    }
    if !(w_total.is_finite() && w_total > 0.0) {
        return Err(Error::Unstable("all importance weights vanished or overflowed".into()));
    }
    let matrix = HermitianMatrix::new(wx_total / Complex64::new(w_total, 0.0))?;

    // Batch means over groups of chunks for per-coordinate errors.
    let n_batches = partials.len().min(64).max(2);
    let per = partials.len().div_ceil(n_batches);
    let mut batch_ratios: Vec<Vec<f64>> = Vec::new();
    for group in partials.chunks(per) {
        let w: f64 = group.iter().map(|p| p.w).sum();
        if w <= 0.0 {
            continue;
        }
        let mut d = vec![0.0; n];
        for p in group {
            for i in 0..n {
                d[i] += p.wd[i];
            }
        }
        batch_ratios.push(d.into_iter().map(|v| v / w).collect());
    }
    let b = batch_ratios.len() as f64;
    let mut diag_stderr = vec![0.0; n];
    if batch_ratios.len() >= 2 {
        for i in 0..n {
            let mean: f64 = batch_ratios.iter().map(|r| r[i]).sum::<f64>() / b;
            let var: f64 =
                batch_ratios.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (b - 1.0);
            diag_stderr[i] = (var / b).sqrt();
        }
    } else {
        // Single batch: no spread information; report conservative NaN-free zeros.
        diag_stderr = vec![f64::INFINITY; n];
    }

    Ok(McMarginal { matrix, diag_stderr, n_samples })
}
