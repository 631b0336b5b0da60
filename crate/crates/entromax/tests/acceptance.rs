//! Acceptance suite: end-to-end checks of the published contracts, one
//! test per criterion. Each test asserts its numeric tolerances and its
//! own wall-clock budget, and prints a single PASS line with the measured
//! deviations (visible with `--nocapture`).

mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rug::Float;

use entromax::bounds::{bound_pk, eta_estimate_pk};
use entromax::matrix::{cluster_spectrum, HermitianMatrix, DEFAULT_TAU};
use entromax::mc::{mc_estimate_ek, mc_marginal};
use entromax::outer::{eval_ev1, grad_ev1, gw_optimum, Ev1, SymmetricMatrix, SymmetricPD};
use entromax::rank_k::eval_ek;
use entromax::rank_one::{grad_e1, partial_fraction_e1};
use entromax::sampler::{conditional_cdf, sample_p1_batch, sample_simplex_batch};
use entromax::solver::{barycentric_entropy, solve_dual, FirstOrderOracle, PkOracle};

const PREC: u32 = 256;

fn assert_budget(t0: Instant, limit_s: f64, what: &str) -> f64 {
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < limit_s, "{what} took {dt:.1}s, budget {limit_s}s");
    dt
}

/// The log-mass of the whole manifold is zero: E_k(0) = 0 for every
/// dimension up to 32 and every rank, to 1e-12.
#[test]
fn normalization_vanishes_at_the_origin() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0u32;
    for n in 1..=32usize {
        let s = cluster_spectrum(&vec![0.0; n], DEFAULT_TAU).unwrap();
        for k in 1..=n {
            let e = eval_ek(&s, k, PREC).unwrap().to_f64().abs();
            worst = worst.max(e);
            cases += 1;
            assert!(e <= 1e-12, "E_{k}(0) = {e:.3e} for n = {n}");
        }
    }
    let dt = assert_budget(t0, 30.0, "normalization sweep");
    println!("PASS normalization at origin: {cases} (n,k) pairs, max |E_k(0)| = {worst:.3e}, {dt:.2}s");
}

/// Determinant route vs the independent partial-fraction sum for E_1 on
/// distinct spectra: relative agreement to 1e-20 at 256-bit precision.
#[test]
fn determinant_and_partial_fraction_routes_agree() {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x0202);
    let mut worst = 0.0f64;
    for case in 0..200u32 {
        let n = rng.random_range(2..=12usize);
        let mut grid = std::collections::BTreeSet::new();
        while grid.len() < n {
            grid.insert(rng.random_range(0..=200u32));
        }
        let y: Vec<f64> = grid.iter().map(|&j| -6.0 + 0.06 * f64::from(j)).collect();
        let s = cluster_spectrum(&y, DEFAULT_TAU).unwrap();
        let det = entromax::rank_one::eval_e1(&s, PREC).unwrap();
        let pf = partial_fraction_e1(&s, PREC).unwrap();
        let rel = common::abs_diff(&det, &pf) / pf.to_f64().abs().max(1.0);
        worst = worst.max(rel);
        assert!(rel <= 1e-20, "case {case} (n = {n}): routes differ by rel {rel:.3e}");
    }
    let dt = assert_budget(t0, 60.0, "cross-formula sweep");
    println!("PASS determinant vs partial fractions: 200 spectra, worst rel {worst:.3e}, {dt:.2}s");
}

/// Evaluation is continuous across the coincident-point boundary: merging
/// a pair separated by 1e-8 moves E_1 by at most 1e-7.
#[test]
fn evaluation_is_continuous_across_coincidence() {
    const EPS: f64 = 1e-8;
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x0303);
    let mut worst = 0.0f64;
    for case in 0..50u32 {
        let n = rng.random_range(2..=8usize);
        let lambda = rng.random_range(-3.0..3.0);
        let mut y = vec![lambda, lambda];
        while y.len() < n {
            let v: f64 = rng.random_range(-3.0..3.0);
            if (v - lambda).abs() >= 0.1 {
                y.push(v);
            }
        }
        let merged = eval_ek(&cluster_spectrum(&y, DEFAULT_TAU).unwrap(), 1, PREC).unwrap();
        y[1] += EPS;
        let split = eval_ek(&cluster_spectrum(&y, DEFAULT_TAU).unwrap(), 1, PREC).unwrap();
        let dev = common::abs_diff(&merged, &split);
        worst = worst.max(dev);
        assert!(dev <= 10.0 * EPS, "case {case} (n = {n}): |E(merged) - E(split)| = {dev:.3e}");
    }
    let dt = assert_budget(t0, 30.0, "continuity sweep");
    println!("PASS confluent continuity: 50 spectra, worst |deltaE| = {worst:.3e} <= {:.0e}, {dt:.2}s", 10.0 * EPS);
}

/// Analytic gradients vs central finite differences of the value oracle
/// (vector-relative 1e-6), and the expanded gradient sums to -k to 1e-12.
#[test]
fn gradients_match_central_differences_and_sum_to_rank() {
    const H: f64 = 1e-3;
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x0404);
    let mut worst_rel = 0.0f64;
    let mut worst_sum = 0.0f64;
    for case in 0..100u32 {
        let n = rng.random_range(2..=8usize);
        let k = rng.random_range(1..=n.min(4));
        let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        if case % 2 == 1 {
            y[1] = y[0];
        }
        let oracle = PkOracle::new(k, PREC);
        let (_, g) = oracle.eval(&y).unwrap();

        let sum_dev = (g.iter().sum::<f64>() + k as f64).abs();
        worst_sum = worst_sum.max(sum_dev);
        assert!(sum_dev <= 1e-12, "case {case}: gradient sum deviates by {sum_dev:.3e}");

        let mut num2 = 0.0f64;
        let mut den2 = 0.0f64;
        for i in 0..n {
            let mut yp = y.clone();
            yp[i] += H;
            let mut ym = y.clone();
            ym[i] -= H;
            let ep = eval_ek(&cluster_spectrum(&yp, DEFAULT_TAU).unwrap(), k, PREC).unwrap();
            let em = eval_ek(&cluster_spectrum(&ym, DEFAULT_TAU).unwrap(), k, PREC).unwrap();
            let mut fd = ep;
            fd -= &em;
            let fd = fd.to_f64() / (2.0 * H);
            num2 += (fd - g[i]) * (fd - g[i]);
            den2 += g[i] * g[i];
        }
        let rel = (num2 / den2).sqrt();
        worst_rel = worst_rel.max(rel);
        assert!(rel <= 1e-6, "case {case} (n = {n}, k = {k}): gradient rel error {rel:.3e}");
    }
    let dt = assert_budget(t0, 120.0, "gradient sweep");
    println!("PASS gradient checks: 100 cases, worst rel {worst_rel:.3e}, worst sum dev {worst_sum:.3e}, {dt:.2}s");
}

/// Monte Carlo over uniform projections confirms exp(E_k) within 3 standard
/// errors for every (n, k) with n <= 6, and the complement identity
/// E_{n-k}(y) = -tr y + E_k(-y) holds exactly and statistically.
#[test]
fn monte_carlo_confirms_mass_and_complement_identity() {
    const N: u64 = 1_000_000;
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x0505);
    let mut worst_pull = 0.0f64;
    for n in 2..=6usize {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = cluster_spectrum(&y, DEFAULT_TAU).unwrap();
        let tr_y: f64 = y.iter().sum();
        let ests: Vec<_> = (1..=n)
            .map(|k| mc_estimate_ek(&y, k, N, 500 + (n * 10 + k) as u64).unwrap())
            .collect();
        for k in 1..=n {
            let mut det = eval_ek(&s, k, PREC).unwrap();
            det.exp_mut();
            let det = det.to_f64();
            let est = &ests[k - 1];
            if k == n {
                let dev = (det - est.mean_f64()).abs();
                assert!(
                    dev <= 1e-12 * det.abs(),
                    "n = {n}, k = n: degenerate mass off by {dev:.3e} vs {det:.6e}"
                );
            } else {
                let pull = (det - est.mean_f64()).abs() / est.stderr_f64();
                worst_pull = worst_pull.max(pull);
                assert!(
                    pull <= 3.0,
                    "n = {n}, k = {k}: MC pull {pull:.2} (det {det:.6e}, mc {:.6e} +- {:.2e})",
                    est.mean_f64(),
                    est.stderr_f64()
                );
            }
        }
        for k in 1..n {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let mut comp = eval_ek(&cluster_spectrum(&neg, DEFAULT_TAU).unwrap(), k, PREC).unwrap();
            comp -= Float::with_val(PREC, tr_y);
            let direct = eval_ek(&s, n - k, PREC).unwrap();
            let dev = common::abs_diff(&comp, &direct) / direct.to_f64().abs().max(1.0);
            assert!(dev <= 1e-12, "n = {n}, k = {k}: complement identity off by {dev:.3e}");

            let mut cval = comp;
            cval.exp_mut();
            let cval = cval.to_f64();
            let est = &ests[n - k - 1];
            let pull = (cval - est.mean_f64()).abs() / est.stderr_f64();
            assert!(pull <= 3.0, "n = {n}, k = {k}: complement MC pull {pull:.2}");
        }
    }
    let dt = assert_budget(t0, 300.0, "Monte Carlo sweep");
    println!("PASS Monte Carlo agreement: n <= 6, all k, N = 1e6, worst pull {worst_pull:.2} sigma, {dt:.1}s");
}

/// The dual solver reproduces an independent scalar-Newton oracle on the
/// two-level marginal and the importance-sampled marginal on a three-level
/// instance; solutions always stay inside the localization radius.
#[test]
fn solver_matches_scalar_oracle_and_sampled_marginal() {
    let oracle = PkOracle::new(1, PREC);

    let t0 = Instant::now();
    let a2 = HermitianMatrix::from_diag(&[0.7, 0.3]).unwrap();
    let sol = solve_dual(&a2, 1, 1e-6, &oracle).unwrap();
    let (_, f_star) = common::two_level_optimum();
    let f_dev = (sol.f_value.to_f64() - f_star).abs();
    assert!(f_dev <= 1e-6, "two-level value off the scalar oracle by {f_dev:.3e}");
    assert!(
        sol.marginal_residual <= 1e-4,
        "two-level marginal residual {:.3e}",
        sol.marginal_residual
    );
    let eta = eta_estimate_pk(&[0.7, 0.3], 1).unwrap().eta;
    let r = bound_pk(2, 1, eta).unwrap();
    for v in &sol.y_diag {
        assert!(v.abs() <= r, "|y| = {} escapes localization radius {r}", v.abs());
    }
    let dt0 = assert_budget(t0, 120.0, "two-level solve");

    let t1 = Instant::now();
    let target = [0.5, 0.3, 0.2];
    let a3 = HermitianMatrix::from_diag(&target).unwrap();
    let sol3 = solve_dual(&a3, 1, 1e-6, &oracle).unwrap();
    for v in &sol3.y_diag {
        assert!(v.abs() <= sol3.bounding_radius);
    }
    let mm = mc_marginal(&sol3.y_diag, 1, 1_000_000, 606).unwrap();
    let mut worst_pull = 0.0f64;
    for i in 0..3 {
        let pull = (mm.matrix.entry(i, i).re - target[i]).abs() / mm.diag_stderr[i];
        worst_pull = worst_pull.max(pull);
        assert!(
            pull <= 3.0,
            "three-level marginal coordinate {i}: pull {pull:.2} (mc {:.6} vs {})",
            mm.matrix.entry(i, i).re,
            target[i]
        );
    }
    let dt1 = assert_budget(t1, 120.0, "three-level solve + MC");
    println!(
        "PASS solver correctness: |F - oracle| = {f_dev:.3e}, residual {:.3e}, marginal worst pull {worst_pull:.2} sigma, {dt0:.1}s + {dt1:.1}s",
        sol.marginal_residual
    );
}

/// Barycentric entropy vanishes at the maximally mixed state and strictly
/// grows as a two-level spectrum skews; values match an independent
/// high-precision oracle.
#[test]
fn entropy_vanishes_at_center_and_grows_with_skew() {
    let t0 = Instant::now();
    let mut worst_center = 0.0f64;
    for n in 2..=4usize {
        let rho = HermitianMatrix::from_diag(&vec![1.0 / n as f64; n]).unwrap();
        let h = barycentric_entropy(&rho, 1e-6).unwrap();
        worst_center = worst_center.max(h.abs());
        assert!(h.abs() <= 1e-6, "H(I/{n}) = {h:.3e}");
    }
    let frozen = [
        (0.2, 0.616879734062483816),
        (0.1, 1.30263059746065976),
        (0.05, 1.99573227561514547),
    ];
    let mut prev = f64::NEG_INFINITY;
    let mut worst_ref = 0.0f64;
    for (eta, h_ref) in frozen {
        let rho = HermitianMatrix::from_diag(&[1.0 - eta, eta]).unwrap();
        let h = barycentric_entropy(&rho, 1e-6).unwrap();
        assert!(h > prev, "entropy not strictly increasing at eta = {eta}: {h} <= {prev}");
        let dev = (h - h_ref).abs();
        worst_ref = worst_ref.max(dev);
        assert!(dev <= 2e-6, "eta = {eta}: H = {h} vs oracle {h_ref}");
        prev = h;
    }
    let dt = assert_budget(t0, 180.0, "entropy sweep");
    println!("PASS barycentric entropy: center max {worst_center:.3e}, skew oracle max dev {worst_ref:.3e}, {dt:.1}s");
}

/// The closed-form Gaussian-rounding optimum is stationary on random SPD
/// targets, the Gaussian log-mass at the identity is (n/2) log pi, and
/// non-positive-definite inputs report a divergent integral.
#[test]
fn gaussian_rounding_optimum_is_stationary_and_normalized() {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x0808);
    let mut worst_resid = 0.0f64;
    for case in 0..100u32 {
        let n = rng.random_range(1..=20usize);
        let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let shift = rng.random_range(0.3..1.3);
        let m = &b * b.transpose() / (n as f64) + DMatrix::<f64>::identity(n, n) * shift;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
        let a = SymmetricPD::new(SymmetricMatrix::from_rows(&rows).unwrap()).unwrap();
        let y = gw_optimum(&a).unwrap();

        let inv = y.matrix().data().clone().try_inverse().expect("optimum is invertible");
        let g = grad_ev1(y.matrix()).unwrap();
        let mut resid = 0.0f64;
        let mut grad_resid = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                resid = resid.max((m[(i, j)] - 0.5 * inv[(i, j)]).abs());
                grad_resid = grad_resid.max((m[(i, j)] + g[(i, j)]).abs());
            }
        }
        worst_resid = worst_resid.max(resid).max(grad_resid);
        assert!(resid <= 1e-10, "case {case} (n = {n}): stationarity residual {resid:.3e}");
        assert!(grad_resid <= 1e-10, "case {case} (n = {n}): gradient residual {grad_resid:.3e}");
    }

    let mut ln_pi = Float::with_val(PREC, rug::float::Constant::Pi);
    ln_pi.ln_mut();
    let mut worst_norm = 0.0f64;
    for n in 1..=20usize {
        let eye: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let eye = SymmetricMatrix::from_rows(&eye).unwrap();
        match eval_ev1(&eye, PREC).unwrap() {
            Ev1::Finite(e) => {
                let mut want = ln_pi.clone();
                want *= Float::with_val(PREC, n) / 2u32;
                let dev = common::abs_diff(&e, &want);
                worst_norm = worst_norm.max(dev);
                assert!(dev <= 1e-12, "identity log-mass off by {dev:.3e} at n = {n}");
            }
            Ev1::Infinite => panic!("identity must have finite mass"),
        }
    }

    for bad in [vec![vec![1.0, 0.0], vec![0.0, -1.0]], vec![vec![1.0, 0.0], vec![0.0, 0.0]]] {
        let m = SymmetricMatrix::from_rows(&bad).unwrap();
        assert!(
            matches!(eval_ev1(&m, PREC).unwrap(), Ev1::Infinite),
            "non-positive-definite input must diverge"
        );
    }
    let dt = assert_budget(t0, 30.0, "Gaussian rounding sweep");
    println!("PASS Gaussian rounding: 100 SPD instances, worst residual {worst_resid:.3e}, identity norm dev {worst_norm:.3e}, {dt:.1}s");
}

/// Emitted samples are genuine rank-one projections, the first simplex
/// coordinate passes a KS test against the computed conditional CDF, and
/// the empirical diagonal mean reproduces -grad E_1 within 3 sigma.
#[test]
fn sampler_agrees_with_cdf_and_gradient_marginal() {
    const SAMPLE_PREC: u32 = 128;
    let t0 = Instant::now();

    let y_frame = HermitianMatrix::from_parts(
        &[vec![1.0, 0.2, 0.0], vec![0.2, 0.5, 0.1], vec![0.0, 0.1, 0.0]],
        None,
    )
    .unwrap();
    let batch = sample_p1_batch(&y_frame, 200, 901, SAMPLE_PREC).unwrap();
    let mut worst_proj = 0.0f64;
    for x in &batch {
        let d = x.data();
        let sq = d * d;
        let mut dev = (x.trace() - 1.0).abs();
        for i in 0..3 {
            for j in 0..3 {
                dev = dev.max((sq[(i, j)] - d[(i, j)]).norm());
            }
        }
        worst_proj = worst_proj.max(dev);
        assert!(dev <= 1e-9, "projection invariants violated by {dev:.3e}");
    }

    let cases: [(&[f64], u64); 3] = [
        (&[0.8, -0.3], 902),
        (&[1.0, 0.5, 0.0], 903),
        (&[2.0, 1.0, 0.5, -0.5, -1.0], 904),
    ];
    let mut p_values = Vec::new();
    for (y, seed) in cases {
        let pts = sample_simplex_batch(y, 10_000, seed, SAMPLE_PREC).unwrap();
        let mut v1: Vec<f64> = pts.iter().map(|p| p.v[0].to_f64()).collect();
        v1.sort_by(f64::total_cmp);
        let full = conditional_cdf(y, &[], 1, 1.0, SAMPLE_PREC).unwrap();
        let nn = v1.len() as f64;
        let mut d_stat = 0.0f64;
        for (i, &x) in v1.iter().enumerate() {
            let mut f = conditional_cdf(y, &[], 1, x, SAMPLE_PREC).unwrap();
            f /= &full;
            let f = f.to_f64();
            d_stat = d_stat.max((i + 1) as f64 / nn - f).max(f - i as f64 / nn);
        }
        let p = common::ks_p_value(d_stat, v1.len());
        assert!(p > 0.01, "KS rejects at n = {}: D = {d_stat:.4}, p = {p:.4}", y.len());
        p_values.push(p);
    }

    let y = [1.0, 0.5, 0.0];
    let tilt = HermitianMatrix::from_diag(&y).unwrap();
    let big_batch = sample_p1_batch(&tilt, 100_000, 905, SAMPLE_PREC).unwrap();
    let s = cluster_spectrum(&y, DEFAULT_TAU).unwrap();
    let grad = grad_e1(&s, PREC).unwrap();
    let assign = s.assign(&y);
    let nn = big_batch.len() as f64;
    let mut worst_pull = 0.0f64;
    for i in 0..3 {
        let vals: Vec<f64> = big_batch.iter().map(|x| x.entry(i, i).re).collect();
        let mean = vals.iter().sum::<f64>() / nn;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nn - 1.0);
        let se = (var / nn).sqrt();
        let target = -grad[assign[i]].to_f64();
        let pull = (mean - target).abs() / se;
        worst_pull = worst_pull.max(pull);
        assert!(pull <= 3.0, "diag mean {i}: pull {pull:.2} (mean {mean:.6} vs {target:.6})");
    }
    let dt = assert_budget(t0, 300.0, "sampler fidelity");
    println!(
        "PASS sampler fidelity: projection dev {worst_proj:.3e}, KS p = {p_values:.4?}, diag worst pull {worst_pull:.2} sigma, {dt:.1}s"
    );
}

/// The optimal tilt separation for diag(eta, 1-eta) grows monotonically as
/// eta halves, with a strictly positive fitted c/eta lower envelope; gaps
/// match an independent high-precision oracle to relative 1e-6.
#[test]
fn tilt_separation_grows_as_interiority_shrinks() {
    let t0 = Instant::now();
    let etas = [0.2, 0.1, 0.05, 0.025];
    let frozen = [
        4.80100754972251784340255,
        9.99544113381484274140093,
        19.9999991755379035746263,
        39.9999999999999932026332,
    ];
    let oracle = PkOracle::new(1, PREC);
    let mut gaps = Vec::new();
    for (&eta, &g_ref) in etas.iter().zip(&frozen) {
        let a = HermitianMatrix::from_diag(&[eta, 1.0 - eta]).unwrap();
        let sol = solve_dual(&a, 1, 1e-6, &oracle).unwrap();
        for v in &sol.y_diag {
            assert!(v.abs() <= sol.bounding_radius);
        }
        let gap = (sol.y_diag[0] - sol.y_diag[1]).abs();
        let dev = (gap - g_ref).abs() / g_ref;
        assert!(dev <= 1e-6, "eta = {eta}: gap {gap} vs oracle {g_ref} (rel {dev:.3e})");
        gaps.push(gap);
    }
    for w in gaps.windows(2) {
        assert!(w[1] > w[0], "gaps not strictly increasing: {gaps:?}");
    }
    let c_env = gaps.iter().zip(etas).map(|(g, e)| g * e).fold(f64::INFINITY, f64::min);
    assert!(c_env > 0.5, "c/eta lower envelope too small: c = {c_env}");
    let dt = assert_budget(t0, 120.0, "interiority sweep");
    println!("PASS tilt separation growth: gaps {gaps:.6?}, envelope c = {c_env:.4}, {dt:.1}s");
}
