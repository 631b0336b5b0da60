//! Exact sampling from the tilted measure `ν(X) ∝ e^{-<Y, X>} dμ₁` on
//! rank-one projections.
//!
//! In the eigenbasis of `Y = U diag(y) U*`, a rank-one projection
//! `X = bb*` with `|b| = 1` is determined by the simplex point
//! `v_i = |b_i|²` and the phases of `b`. Under `μ₁` the vector `v` is
//! uniform on the simplex, the phases are independent and uniform on the
//! circle, and the tilt `e^{-<Y, X>} = e^{-<y, v>}` touches only `v`.
//! Sampling therefore factorizes:
//!
//! 1. draw `v` with density `∝ e^{-<y, v>}` on the simplex by iterated
//!    conditional CDF inversion,
//! 2. draw phases `z_j = exp(2πi u_j)`,
//! 3. assemble `X = (z√v)(z√v)*` and conjugate back by `U`.
//!
//! Writing `w = -y`, the conditional CDF of coordinate `k` given
//! `v_1 = α_1, ..., v_{k-1} = α_{k-1}` (with `α = Σ α_i`) is
//!
//! ```text
//! F_k(β) = (n-1)! e^{<w_pre, α_pre>} / Π_{i<j} (λ_j - λ_i)^{m_i m_j}
//!          · ∫_0^β e^{w_k t} det(M(w', 1 - α - t)) dt,
//! ```
//!
//! where `λ_1 < ... < λ_p` are the clustered distinct values of the
//! remaining tilts `w' = (w_{k+1}, ..., w_n)` with multiplicities `m_l`,
//! and `M(w', γ)` is the evaluation matrix whose last row alone carries
//! `γ`. Expanding the determinant along that row turns the integral into
//! a fixed cofactor combination of entrywise primitives: with
//! `δ = w_k - λ_l`, the column for `(λ_l, j)` integrates to
//!
//! ```text
//! e^{(1-α)λ_l} Σ_{i=0}^{j} [(1-α-β)^i e^{δβ} - (1-α)^i] / (i! δ^{j-i+1})
//! ```
//!
//! and to `e^{(1-α)λ_l} [(1-α)^{j+1} - (1-α-β)^{j+1}] / (j+1)!` when
//! `w_k` falls in cluster `λ_l` (decided by the same tolerance as the
//! spectrum clustering). The cofactors of the static top block depend
//! only on `(y, k)`, so they are precomputed once and shared across all
//! samples and bisection steps.
//!
//! Near-coincident `δ` makes the primitive an alternating sum with heavy
//! cancellation; every full-range value is therefore cross-checked at a
//! doubled precision and escalated until two consecutive evaluations
//! agree, and inversion bisects at the accepted precision (at most
//! [`MAX_BISECTIONS`] steps or until the bracket is narrower than
//! `2^{-prec/2}`). Simplex coordinates are carried as [`BigReal`] so the
//! emitted point sums to one far below that tolerance.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use rug::Float;

use crate::bigreal::{self, big, validate_prec, BigReal, MAX_ESCALATIONS};
use crate::linalg;
use crate::matrix::{cluster_spectrum, diagonal_frame, DiagonalFrame, HermitianMatrix, DEFAULT_TAU};
use crate::rank_one::{ascending_points, log_vandermonde, matrix_at_points};
use crate::streams::stream_rng;
use crate::{Error, Result};

/// Bisection step cap for one CDF inversion.
pub const MAX_BISECTIONS: u32 = 128;

/// A point of the standard simplex, kept in extended precision so the
/// coordinates sum to one well below the inversion tolerance.
#[derive(Debug, Clone)]
pub struct SimplexPoint {
    pub v: Vec<BigReal>,
}

impl SimplexPoint {
    pub fn to_f64(&self) -> Vec<f64> {
        self.v.iter().map(|x| x.to_f64()).collect()
    }
}

/// Unit-modulus phases for the off-diagonal structure of a projection.
#[derive(Debug, Clone)]
pub struct PhaseVector {
    pub z: Vec<Complex64>,
}

impl PhaseVector {
    /// `z_j = exp(2πi u_j)` from uniforms `u_j ∈ [0, 1)`.
    pub fn from_uniforms(u: &[f64]) -> PhaseVector {
        let z = u
            .iter()
            .map(|&x| Complex64::from_polar(1.0, std::f64::consts::TAU * x))
            .collect();
        PhaseVector { z }
    }
}

/// Whether the active tilt coincides with a cluster of the remaining
/// tilts, and the static inverse powers `δ^{-p}` when it does not.
#[derive(Debug, Clone)]
enum BlockKind {
    Coincident,
    Distinct { delta: BigReal, inv_pows: Vec<BigReal> },
}

/// Everything about the conditional CDF of one coordinate that does not
/// depend on the conditioning values: clustered points of the remaining
/// tilts, last-row cofactors, Vandermonde denominator, and the active
/// tilt's relation to each cluster.
#[derive(Debug, Clone)]
struct CdfContext {
    prec: u32,
    points: Vec<BigReal>,
    mult: Vec<usize>,
    blocks: Vec<BlockKind>,
    cofactors: Vec<BigReal>,
    inv_fact: Vec<BigReal>,
    inv_vand: BigReal,
    prefactor: BigReal,
}

impl CdfContext {
    /// Builds the context for 1-based coordinate `index` of the tilt
    /// vector `y` (the final coordinate is determined, hence
    /// `1 <= index <= n-1`).
    fn new(y: &[f64], index: usize, prec: u32) -> Result<CdfContext> {
        validate_prec(prec)?;
        let n = y.len();
        if index == 0 || index >= n {
            return Err(Error::Invalid(format!(
                "coordinate index must lie in 1..={}, got {index} (the final \
                 coordinate is determined by the others)",
                n.max(1) - 1
            )));
        }
        let rest = &y[index..];
        let s = cluster_spectrum(rest, DEFAULT_TAU)?;
        let points = ascending_points(&s, prec);
        let mult = s.mult().to_vec();
        let m = rest.len();

        // Signed minors of the static top block along the last row.
        let full = matrix_at_points(&points, &mult, &big(prec, 1.0), prec);
        let mut cofactors = Vec::with_capacity(m);
        for c in 0..m {
            let minor: Vec<Vec<BigReal>> = (0..m.saturating_sub(1))
                .map(|r| {
                    (0..m)
                        .filter(|&cc| cc != c)
                        .map(|cc| full[r][cc].clone())
                        .collect()
                })
                .collect();
            let mut d = linalg::det(minor, prec);
            if (m - 1 + c) % 2 == 1 {
                d = -d;
            }
            cofactors.push(d);
        }

        let lv = log_vandermonde(&points, &mult, prec)?;
        let inv_vand = (-lv).exp();
        let w_cur = -big(prec, y[index - 1]);
        let scale = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let thr = DEFAULT_TAU * (1.0 + scale);
        let mut blocks = Vec::with_capacity(points.len());
        for (lam, &ml) in points.iter().zip(&mult) {
            let delta = Float::with_val(prec, &w_cur - lam);
            if delta.clone().abs().to_f64() <= thr {
                blocks.push(BlockKind::Coincident);
            } else {
                let inv = delta.clone().recip();
                let mut inv_pows = vec![big(prec, 1.0)];
                for _ in 0..ml {
                    let nx = Float::with_val(prec, inv_pows.last().unwrap() * &inv);
                    inv_pows.push(nx);
                }
                blocks.push(BlockKind::Distinct { delta, inv_pows });
            }
        }
        let inv_fact: Vec<BigReal> =
            (0..=m).map(|i| bigreal::factorial(prec, i as u32).recip()).collect();
        let prefactor = bigreal::factorial(prec, (n - 1) as u32);
        Ok(CdfContext { prec, points, mult, blocks, cofactors, inv_fact, inv_vand, prefactor })
    }

    /// Unnormalized conditional CDF at `beta`, given the accumulated
    /// prefix mass `alpha`; `tilt` multiplies in `e^{<w_pre, α_pre>}`
    /// when the absolute normalization matters (it cancels in inversion).
    fn eval(&self, alpha: &BigReal, tilt: Option<&BigReal>, beta: &BigReal) -> BigReal {
        let prec = self.prec;
        let mut one_a = big(prec, 1.0);
        one_a -= alpha;
        let mut one_ab = one_a.clone();
        one_ab -= beta;
        let mmax = self.mult.iter().copied().max().unwrap_or(0);
        let mut pow_a = vec![big(prec, 1.0)];
        let mut pow_ab = vec![big(prec, 1.0)];
        for _ in 0..mmax {
            let na = Float::with_val(prec, pow_a.last().unwrap() * &one_a);
            let nb = Float::with_val(prec, pow_ab.last().unwrap() * &one_ab);
            pow_a.push(na);
            pow_ab.push(nb);
        }

        let mut total = big(prec, 0.0);
        let mut col = 0usize;
        for (l, &ml) in self.mult.iter().enumerate() {
            let lam = &self.points[l];
            let e_pref = Float::with_val(prec, &one_a * lam).exp();
            match &self.blocks[l] {
                BlockKind::Coincident => {
                    for j in 0..ml {
                        let mut num = pow_a[j + 1].clone();
                        num -= &pow_ab[j + 1];
                        num *= &self.inv_fact[j + 1];
                        num *= &e_pref;
                        total += num * &self.cofactors[col];
                        col += 1;
                    }
                }
                BlockKind::Distinct { delta, inv_pows } => {
                    let e_db = Float::with_val(prec, delta * beta).exp();
                    for j in 0..ml {
                        let mut s = big(prec, 0.0);
                        for i in 0..=j {
                            let mut term = Float::with_val(prec, &pow_ab[i] * &e_db);
                            term -= &pow_a[i];
                            term *= &self.inv_fact[i];
                            term *= &inv_pows[j - i + 1];
                            s += term;
                        }
                        s *= &e_pref;
                        total += s * &self.cofactors[col];
                        col += 1;
                    }
                }
            }
        }
        let mut f = Float::with_val(prec, &self.prefactor * &self.inv_vand);
        if let Some(t) = tilt {
            f *= t;
        }
        f * total
    }
}

/// Unnormalized conditional CDF `F_index(beta)` of the simplex density
/// `∝ e^{-<y, v>}`, conditioned on the first `index - 1` coordinates
/// taking the values in `prefix` (1-based `index`; the trailing
/// coordinate is determined and admits no CDF). Monotone nondecreasing
/// in `beta` with `F(0) = 0`; evaluated through the precision-doubling
/// protocol.
pub fn conditional_cdf(
    y: &[f64],
    prefix: &[f64],
    index: usize,
    beta: f64,
    prec: u32,
) -> Result<BigReal> {
    validate_prec(prec)?;
    let n = y.len();
    if n == 0 || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("tilt vector must be nonempty and finite".into()));
    }
    if prefix.len() + 1 != index {
        return Err(Error::Invalid(format!(
            "coordinate index {index} does not follow a prefix of length {}",
            prefix.len()
        )));
    }
    if prefix.iter().any(|&a| !a.is_finite() || a < 0.0) {
        return Err(Error::Invalid("prefix values must be finite and nonnegative".into()));
    }
    let alpha: f64 = prefix.iter().sum();
    if alpha > 1.0 + 1e-12 {
        return Err(Error::Invalid(format!("prefix mass {alpha} exceeds the simplex")));
    }
    if !beta.is_finite() || beta < 0.0 || beta > 1.0 - alpha + 1e-12 {
        return Err(Error::Invalid(format!(
            "beta = {beta} outside the conditional range [0, {}]",
            1.0 - alpha
        )));
    }
    let beta = beta.min(1.0 - alpha);
    let tilt_log: f64 = y.iter().zip(prefix).map(|(yy, p)| yy * p).sum();
    bigreal::stabilize(
        prec,
        |p| {
            let ctx = CdfContext::new(y, index, p)?;
            let tilt = (-big(p, tilt_log)).exp();
            Ok(ctx.eval(&big(p, alpha), Some(&tilt), &big(p, beta)))
        },
        bigreal::agree_scalar,
    )
}

/// Iterated conditional-CDF sampler for the simplex density
/// `∝ e^{-<y, v>}`, with per-coordinate precomputation shared across
/// samples.
#[derive(Debug, Clone)]
pub struct SimplexSampler {
    y: Vec<f64>,
    prec: u32,
    carry: u32,
    /// Contexts per coordinate, one entry per precision doubling.
    ctxs: Vec<Vec<CdfContext>>,
}

impl SimplexSampler {
    pub fn new(y: &[f64], prec: u32) -> Result<SimplexSampler> {
        validate_prec(prec)?;
        if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("tilt vector must be nonempty and finite".into()));
        }
        let n = y.len();
        // Carry precision keeps bisection midpoints and the running
        // prefix sums exact well past the bracket tolerance.
        let carry = prec.saturating_mul(2).saturating_add(64 * (n as u32 + 1));
        let mut s = SimplexSampler {
            y: y.to_vec(),
            prec,
            carry,
            ctxs: vec![Vec::new(); n.saturating_sub(1)],
        };
        for coord in 0..n.saturating_sub(1) {
            s.ensure_level(coord, 0)?;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn ensure_level(&mut self, coord: usize, level: usize) -> Result<()> {
        while self.ctxs[coord].len() <= level {
            let shift = self.ctxs[coord].len() as u32;
            let p = self
                .prec
                .checked_shl(shift)
                .filter(|&p| p <= 1 << 24)
                .ok_or_else(|| Error::Unstable("precision escalation overflow".into()))?;
            let ctx = CdfContext::new(&self.y, coord + 1, p)?;
            self.ctxs[coord].push(ctx);
        }
        Ok(())
    }

    /// Full-range CDF value accepted only once two consecutive precision
    /// doublings agree; returns the accepted level for the inversion.
    fn certified_full(&mut self, coord: usize, alpha: &BigReal) -> Result<(usize, BigReal)> {
        let mut full = big(self.carry, 1.0);
        full -= alpha;
        self.ensure_level(coord, 0)?;
        let mut prev = self.ctxs[coord][0].eval(alpha, None, &full);
        for level in 1..=(MAX_ESCALATIONS as usize + 1) {
            self.ensure_level(coord, level)?;
            let next = self.ctxs[coord][level].eval(alpha, None, &full);
            if bigreal::agree_scalar(&prev, &next, self.prec) {
                if next <= 0.0 {
                    return Err(Error::Unstable(format!(
                        "conditional CDF normalization is not positive at coordinate {}",
                        coord + 1
                    )));
                }
                return Ok((level, next));
            }
            prev = next;
        }
        Err(Error::Unstable(format!(
            "conditional CDF at coordinate {} failed to stabilize across {} precision doublings",
            coord + 1,
            MAX_ESCALATIONS + 1
        )))
    }

    /// Monotone bisection for `F(beta) = target` on `[0, 1 - alpha]`.
    fn invert(
        &self,
        coord: usize,
        level: usize,
        alpha: &BigReal,
        target: &BigReal,
    ) -> Result<BigReal> {
        let ctx = &self.ctxs[coord][level];
        let carry = self.carry;
        let mut lo = big(carry, 0.0);
        let mut hi = big(carry, 1.0);
        hi -= alpha;
        let tol = big(carry, 1.0) >> (self.prec / 2);
        for _ in 0..MAX_BISECTIONS {
            let width = Float::with_val(carry, &hi - &lo);
            if width <= tol {
                break;
            }
            let mid = Float::with_val(carry, &lo + &hi) / 2u32;
            let f = ctx.eval(alpha, None, &mid);
            if !f.is_finite() {
                return Err(Error::Unstable(format!(
                    "conditional CDF not finite during inversion; bracket [{:e}, {:e}]",
                    lo.to_f64(),
                    hi.to_f64()
                )));
            }
            if f < *target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Float::with_val(carry, &lo + &hi) / 2u32)
    }

    /// Draws one simplex point from the supplied per-coordinate uniforms
    /// (`n - 1` values; the last coordinate is determined).
    pub fn sample_from_uniforms(&mut self, uniforms: &[f64]) -> Result<SimplexPoint> {
        let n = self.y.len();
        if uniforms.len() + 1 != n {
            return Err(Error::Invalid(format!(
                "need {} uniforms for {} coordinates, got {}",
                n - 1,
                n,
                uniforms.len()
            )));
        }
        if uniforms.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::Invalid("inversion uniforms must lie in [0, 1]".into()));
        }
        let carry = self.carry;
        let mut v = Vec::with_capacity(n);
        let mut alpha = big(carry, 0.0);
        for coord in 0..n - 1 {
            let (level, f_full) = self.certified_full(coord, &alpha)?;
            let mut target = Float::with_val(carry, &f_full);
            target *= big(carry, uniforms[coord]);
            let beta = self.invert(coord, level, &alpha, &target)?;
            alpha += &beta;
            v.push(beta);
        }
        let mut last = big(carry, 1.0);
        last -= &alpha;
        if last.is_sign_negative() {
            last = big(carry, 0.0);
        }
        v.push(last);
        Ok(SimplexPoint { v })
    }

    /// Draws one simplex point using `n - 1` uniforms from `rng`.
    pub fn sample(&mut self, rng: &mut ChaCha12Rng) -> Result<SimplexPoint> {
        let n = self.y.len();
        let uniforms: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
        self.sample_from_uniforms(&uniforms)
    }
}

/// Draws one simplex point with density `∝ e^{-<y, v>}` using the given
/// stream.
pub fn sample_simplex(y: &[f64], rng: &mut ChaCha12Rng, prec: u32) -> Result<SimplexPoint> {
    SimplexSampler::new(y, prec)?.sample(rng)
}

/// Assembles `X = (z√v)(z√v)*` in the frame and rotates back. The
/// simplex point is renormalized in `f64` so the emitted projection is
/// idempotent and unit-trace to floating-point accuracy.
fn assemble_projection(
    frame: &DiagonalFrame,
    point: &SimplexPoint,
    phases: &PhaseVector,
) -> Result<HermitianMatrix> {
    let n = point.v.len();
    if phases.z.len() != n {
        return Err(Error::Invalid("phase count does not match dimension".into()));
    }
    let vf = point.to_f64();
    let total: f64 = vf.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Unstable("simplex point does not sum to a positive mass".into()));
    }
    let b: Vec<Complex64> =
        (0..n).map(|i| phases.z[i] * (vf[i] / total).max(0.0).sqrt()).collect();
    let x = DMatrix::from_fn(n, n, |i, j| b[i] * b[j].conj());
    let in_frame = HermitianMatrix::new(x)?;
    frame.conjugate(&in_frame)
}

/// Draws one rank-one projection from `ν(X) ∝ e^{-<Y, X>} dμ₁`.
pub fn sample_p1(y: &HermitianMatrix, rng: &mut ChaCha12Rng, prec: u32) -> Result<HermitianMatrix> {
    let frame = diagonal_frame(y)?;
    let mut sampler = SimplexSampler::new(&frame.a, prec)?;
    let n = y.n();
    let point = sampler.sample(rng)?;
    let pu: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    assemble_projection(&frame, &point, &PhaseVector::from_uniforms(&pu))
}

/// Uniforms for sample `index`: coordinate `k` reads its own stream
/// `index * (n + 1) + k`, so batch output is independent of the thread
/// layout.
fn coordinate_uniforms(seed: u64, index: u64, n: usize) -> Vec<f64> {
    (0..n as u64 - 1)
        .map(|k| stream_rng(seed, index * (n as u64 + 1) + k).random::<f64>())
        .collect()
}

fn phase_uniforms(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, index * (n as u64 + 1) + n as u64);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Batch of simplex points with per-coordinate RNG streams; the result
/// is bit-identical for a given seed regardless of parallel scheduling.
pub fn sample_simplex_batch(
    y: &[f64],
    n_samples: usize,
    seed: u64,
    prec: u32,
) -> Result<Vec<SimplexPoint>> {
    let base = SimplexSampler::new(y, prec)?;
    let n = y.len();
    (0..n_samples)
        .into_par_iter()
        .map_init(
            || base.clone(),
            |s, i| s.sample_from_uniforms(&coordinate_uniforms(seed, i as u64, n)),
        )
        .collect()
}

/// Batch of rank-one projections from `ν(X) ∝ e^{-<Y, X>} dμ₁`, one RNG
/// stream per (sample, coordinate) plus one per sample for phases.
pub fn sample_p1_batch(
    y: &HermitianMatrix,
    n_samples: usize,
    seed: u64,
    prec: u32,
) -> Result<Vec<HermitianMatrix>> {
    let frame = diagonal_frame(y)?;
    let base = SimplexSampler::new(&frame.a, prec)?;
    let n = y.n();
    (0..n_samples)
        .into_par_iter()
        .map_init(
            || base.clone(),
            |s, i| {
                let point = s.sample_from_uniforms(&coordinate_uniforms(seed, i as u64, n))?;
                let phases = PhaseVector::from_uniforms(&phase_uniforms(seed, i as u64, n));
                assemble_projection(&frame, &point, &phases)
            },
        )
        .collect()
}
