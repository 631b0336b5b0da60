//! Certified minimization of the dual `F_A(Y) = <Y, A> + E_k(Y)`.
//!
//! Adding a multiple of the identity to `Y` does not change `F_A` when
//! `tr A = k`, so the search runs on the traceless diagonal slice in the
//! eigenbasis of `A`: `y(z) = (z_1, ..., z_{n-1}, -Σ z_i)` for
//! `z ∈ R^d`, `d = n - 1`. The minimizer is known a priori to satisfy
//! `||y||_∞ <= R` with `R` from [`crate::bounds::bound_pk`], so `z`
//! lives in the box `K = [-R, R]^d`.
//!
//! The method is a central-cut ellipsoid iteration with two independent
//! optimality certificates, both valid bounds on `F_best - F*`:
//!
//! * volumetric: after `N` cuts,
//!   `gap <= (vol E_N / vol K)^(1/d) * VarK`, where
//!   `VarK = 4 R d >= max_K F - min_K F` (every component of
//!   `∇F = a + ∇E_k` lies in `(-1, 1)`, so `||∇_z F||_2 <= 2 sqrt(d)`
//!   and the variation over a box of diameter `2 R sqrt(d)` is at most
//!   `4 R d`);
//! * affine minorant: for every evaluated pair `(z_i, g_i, F_i)` and the
//!   current ellipsoid `E = {c + P^(1/2) u : |u| <= 1}` (which always
//!   contains the optimum),
//!   `F* >= F_i + <g_i, c - z_i> - sqrt(g_iᵀ P g_i)`.
//!
//! The reported `certified_gap` is the running minimum over both. Before
//! the cutting loop a damped Newton refinement (finite-difference Hessian
//! of the oracle gradient) polishes the incumbent; a polished stationary
//! point makes the affine minorant collapse the gap immediately, so the
//! ellipsoid loop acts as certification (and as a fallback when Newton
//! stalls). Stopping occurs once `certified_gap <= ε`; the bound chain
//! `KL(optimal distribution from the reported one) <= gap` and
//! `TV <= sqrt(2 gap)` is exposed as `kl_bound` / `tv_bound`.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::bigreal::{big, BigReal, DEFAULT_PREC};
use crate::bounds::{bound_pk, eta_estimate_pk};
use crate::matrix::{cluster_spectrum, diagonal_frame, DiagonalFrame, HermitianMatrix, DEFAULT_TAU};
use crate::rank_k::{eval_ek, grad_ek};
use crate::{Error, Result};

/// First-order access to `E_k`: value and per-coordinate gradient at a
/// real diagonal `y`. Implementations must return gradients consistent
/// with the value under finite differences (tested for [`PkOracle`]).
pub trait FirstOrderOracle {
    fn eval(&self, y: &[f64]) -> Result<(BigReal, Vec<f64>)>;
}

/// The determinant-based oracle for rank-`k` projections.
#[derive(Debug, Clone)]
pub struct PkOracle {
    pub k: usize,
    pub prec: u32,
    pub tau: f64,
}

impl PkOracle {
    pub fn new(k: usize, prec: u32) -> Self {
        PkOracle { k, prec, tau: DEFAULT_TAU }
    }
}

impl FirstOrderOracle for PkOracle {
    fn eval(&self, y: &[f64]) -> Result<(BigReal, Vec<f64>)> {
        let s = cluster_spectrum(y, self.tau)?;
        let e = eval_ek(&s, self.k, self.prec)?;
        let g = grad_ek(&s, self.k, self.prec)?;
        let assign = s.assign(y);
        let grad = assign.iter().map(|&c| g[c].to_f64()).collect();
        Ok((e, grad))
    }
}

/// Options for [`solve_dual_with`].
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Cap on ellipsoid iterations (defaults to the volumetric worst case
    /// plus margin).
    pub max_iterations: Option<u64>,
    /// Write a JSONL iteration trace to this path.
    pub trace: Option<PathBuf>,
}

/// Solution of the dual problem with its certificate.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// Optimal traceless diagonal in the frame of `A` (descending
    /// eigenvalue order).
    pub y_diag: Vec<f64>,
    /// Dual value `<Y, A> + E_k(Y)` at `y_diag`.
    pub f_value: BigReal,
    /// Certified bound on `F(y_diag) - min F`.
    pub certified_gap: f64,
    /// Sup-norm localization radius used for the search box.
    pub bounding_radius: f64,
    /// Total oracle evaluations (Newton refinement and cutting loop).
    pub iterations: u64,
    /// `||a + ∇E_k(y_diag)||_∞`: distance of the realized marginal
    /// diagonal from the target eigenvalues.
    pub marginal_residual: f64,
    /// Relative entropy bound between the distribution at `y_diag` and
    /// the optimum: equals `certified_gap`.
    pub kl_bound: f64,
    /// Total variation bound `sqrt(2 * kl_bound)`.
    pub tv_bound: f64,
    /// Eigenbasis of `A` carrying `y_diag` back to the original basis.
    pub frame: DiagonalFrame,
}

impl DualSolution {
    /// The dual matrix in the original basis: `U diag(y) U*`.
    pub fn y_full(&self) -> Result<HermitianMatrix> {
        self.frame.from_diagonal(&self.y_diag)
    }
}

#[derive(Serialize)]
struct TraceLine {
    iter: u64,
    center_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

/// One recorded oracle evaluation in `z`-coordinates.
struct EvalRecord {
    z: Vec<f64>,
    g: Vec<f64>,
    f: f64,
}

struct Incumbent {
    z: Vec<f64>,
    f: f64,
    f_big: BigReal,
    residual: f64,
}

fn ln_factorial_f64(m: u64) -> f64 {
    (1..=m).map(|i| (i as f64).ln()).sum()
}

/// `log` volume of the `d`-dimensional unit ball.
fn ln_unit_ball_volume(d: u64) -> f64 {
    let pi = std::f64::consts::PI;
    let ln_gamma = if d % 2 == 0 {
        // Γ(d/2 + 1) = (d/2)!
        ln_factorial_f64(d / 2)
    } else {
        // Γ(q + 1/2) = (2q)! sqrt(π) / (4^q q!), with q = (d + 1) / 2.
        let q = (d + 1) / 2;
        ln_factorial_f64(2 * q) - 2.0 * q as f64 * 2.0f64.ln() - ln_factorial_f64(q)
            + 0.5 * pi.ln()
    };
    (d as f64 / 2.0) * pi.ln() - ln_gamma
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(p: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    p.iter().map(|row| dot(row, v)).collect()
}

/// Embeds box coordinates into the traceless diagonal.
fn embed(z: &[f64]) -> Vec<f64> {
    let mut y = z.to_vec();
    y.push(-z.iter().sum::<f64>());
    y
}

struct Objective<'a> {
    a: &'a [f64],
    oracle: &'a dyn FirstOrderOracle,
    evals: u64,
}

impl Objective<'_> {
    /// Value (exact and `f64`), `z`-gradient, and marginal residual at `z`.
    fn eval(&mut self, z: &[f64]) -> Result<(BigReal, f64, Vec<f64>, f64)> {
        let y = embed(z);
        let (e, grad_e) = self.oracle.eval(&y)?;
        self.evals += 1;
        let n = y.len();
        let g_full: Vec<f64> = (0..n).map(|i| self.a[i] + grad_e[i]).collect();
        let g_z: Vec<f64> = (0..n - 1).map(|i| g_full[i] - g_full[n - 1]).collect();
        let mut f_big = e;
        let dot_ya = dot(&y, self.a);
        f_big += big(f_big.prec().max(64), dot_ya);
        let f = f_big.to_f64();
        if !f.is_finite() {
            return Err(Error::Unstable("dual value overflowed f64".into()));
        }
        Ok((f_big, f, g_z, sup_norm(&g_full)))
    }
}

/// Damped Newton refinement of the incumbent using a finite-difference
/// Hessian of the oracle gradient. Every evaluation lands in `records`
/// (each is a valid global minorant); failures to progress just stop the
/// refinement, never the solve.
fn newton_polish(
    obj: &mut Objective,
    start: Vec<f64>,
    r_box: f64,
    records: &mut Vec<EvalRecord>,
    best: &mut Option<Incumbent>,
) -> Result<()> {
    let d = start.len();
    let mut z = start;
    let (mut f_big, mut f, mut g, mut residual) = obj.eval(&z)?;
    records.push(EvalRecord { z: z.clone(), g: g.clone(), f });
    if best.as_ref().is_none_or(|b| f < b.f) {
        *best = Some(Incumbent { z: z.clone(), f, f_big: f_big.clone(), residual });
    }
    for _ in 0..24 {
        if sup_norm(&g) <= 1e-12 {
            break;
        }
        // Central-difference Hessian columns of the z-gradient.
        let mut h = vec![vec![0.0; d]; d];
        for j in 0..d {
            let step = 1e-5 * (1.0 + z[j].abs());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += step;
            zm[j] -= step;
            let (_, fp, gp, _) = obj.eval(&zp)?;
            let (_, fm, gm, _) = obj.eval(&zm)?;
            records.push(EvalRecord { z: zp, g: gp.clone(), f: fp });
            records.push(EvalRecord { z: zm, g: gm.clone(), f: fm });
            for i in 0..d {
                h[i][j] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = avg;
                h[j][i] = avg;
            }
        }
        let hm = nalgebra::DMatrix::from_fn(d, d, |i, j| h[i][j]);
        let gv = nalgebra::DVector::from_vec(g.clone());
        let Some(delta) = hm.lu().solve(&gv) else { break };
        // Backtracking on the dual value, staying inside the search box.
        let mut t = 1.0f64;
        let mut improved = false;
        for _ in 0..20 {
            let zt: Vec<f64> = (0..d).map(|i| z[i] - t * delta[i]).collect();
            if sup_norm(&zt) <= r_box {
                let (fb_t, f_t, g_t, res_t) = obj.eval(&zt)?;
                records.push(EvalRecord { z: zt.clone(), g: g_t.clone(), f: f_t });
                if f_t < f {
                    z = zt;
                    f_big = fb_t;
                    f = f_t;
                    g = g_t;
                    residual = res_t;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if best.as_ref().is_none_or(|b| f < b.f) {
            *best = Some(Incumbent { z: z.clone(), f, f_big: f_big.clone(), residual });
        }
        if !improved {
            break;
        }
    }
    Ok(())
}

/// Best affine-minorant lower bound over the ellipsoid `(c, p)`.
fn minorant_bound(records: &[EvalRecord], c: &[f64], p: &[Vec<f64>]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for r in records {
        let pg = mat_vec(p, &r.g);
        let quad = dot(&r.g, &pg).max(0.0);
        let shift: f64 = (0..c.len()).map(|i| r.g[i] * (c[i] - r.z[i])).sum();
        let bound = r.f + shift - quad.sqrt();
        if bound > best {
            best = bound;
        }
    }
    best
}

/// Minimizes `<Y, A> + E_k(Y)` over traceless Hermitian `Y` commuting
/// with `A`, to certified gap `eps`, using the supplied oracle.
///
/// `A` must be strictly interior: positive definite with eigenvalues
/// strictly below one and `tr A = k` (within `1e-9`), otherwise
/// [`Error::Interior`] is returned. The degenerate `k = n` problem is
/// answered exactly at `Y = 0` when `A = I`.
pub fn solve_dual(
    a: &HermitianMatrix,
    k: usize,
    eps: f64,
    oracle: &dyn FirstOrderOracle,
) -> Result<DualSolution> {
    solve_dual_with(a, k, eps, oracle, &SolveOptions::default())
}

pub fn solve_dual_with(
    a: &HermitianMatrix,
    k: usize,
    eps: f64,
    oracle: &dyn FirstOrderOracle,
    opts: &SolveOptions,
) -> Result<DualSolution> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Invalid(format!("gap target must be positive, got {eps}")));
    }
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let frame = diagonal_frame(a)?;

    if k == n {
        // Only X = I has rank n; the marginal must be the identity and
        // the optimal tilt is trivial.
        let dev = frame.a.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        if dev > 1e-9 {
            return Err(Error::Interior(format!(
                "k = n = {n} requires A = I, but an eigenvalue deviates by {dev:.3e}"
            )));
        }
        return Ok(DualSolution {
            y_diag: vec![0.0; n],
            f_value: big(DEFAULT_PREC, 0.0),
            certified_gap: 0.0,
            bounding_radius: 0.0,
            iterations: 0,
            marginal_residual: dev,
            kl_bound: 0.0,
            tv_bound: 0.0,
            frame,
        });
    }

    let eta = eta_estimate_pk(&frame.a, k)?;
    let r_box = bound_pk(n, k, eta.eta)?;
    let d = n - 1;
    let df = d as f64;
    let var_box = 4.0 * r_box * df;

    let mut obj = Objective { a: &frame.a, oracle, evals: 0 };
    let mut records: Vec<EvalRecord> = Vec::new();
    let mut best: Option<Incumbent> = None;

    // Newton refinement first: a polished stationary point makes the
    // minorant certificate collapse within the first cutting iterations.
    newton_polish(&mut obj, vec![0.0; d], r_box, &mut records, &mut best)?;

    // Ellipsoid state: E = {c + P^(1/2) u : |u| <= 1}, starting from the
    // ball of radius R sqrt(d) that circumscribes the box K.
    let mut c = vec![0.0f64; d];
    let mut p: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { r_box * r_box * df } else { 0.0 }).collect())
        .collect();
    // log(vol E / vol K) starts at log V_d + d log(sqrt(d)/2).
    let mut ln_vol_ratio = ln_unit_ball_volume(d as u64) + df * (df.sqrt() / 2.0).ln();
    let ln_cut_factor = if d == 1 {
        -std::f64::consts::LN_2
    } else {
        (df / (df + 1.0)).ln() + 0.5 * (df - 1.0) * (df * df / (df * df - 1.0)).ln()
    };
    let worst_case_iters = {
        let target = (eps / var_box).ln() * df;
        (((target - ln_vol_ratio) / ln_cut_factor).ceil().max(0.0) as u64) + 32
    };
    let max_iterations = opts.max_iterations.unwrap_or(worst_case_iters).min(2_000_000);

    let mut trace = match &opts.trace {
        Some(path) => Some(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => None,
    };
    let mut certified = f64::INFINITY;
    let mut geometry_ok = true;

    for iter in 0..max_iterations {
        // Certificates for the current ellipsoid (which contains the optimum).
        let vol_gap = (ln_vol_ratio / df).exp() * var_box;
        certified = certified.min(vol_gap);
        if let Some(b) = &best {
            let lower = minorant_bound(&records, &c, &p);
            if lower.is_finite() {
                certified = certified.min((b.f - lower).max(0.0));
            }
        }

        let mut value = None;
        let cut: Vec<f64> = if sup_norm(&c) > r_box {
            // Feasibility cut: discard the halfspace leaving the box.
            let mut imax = 0;
            for i in 0..d {
                if c[i].abs() > c[imax].abs() {
                    imax = i;
                }
            }
            let mut g = vec![0.0; d];
            g[imax] = c[imax].signum();
            g
        } else {
            let (f_big, f, g_z, residual) = obj.eval(&c)?;
            records.push(EvalRecord { z: c.clone(), g: g_z.clone(), f });
            if best.as_ref().is_none_or(|b| f < b.f) {
                best = Some(Incumbent { z: c.clone(), f, f_big, residual });
            }
            value = Some(f);
            let lower = minorant_bound(&records, &c, &p);
            if lower.is_finite() {
                certified = certified.min((best.as_ref().unwrap().f - lower).max(0.0));
            }
            g_z
        };

        if let Some(w) = trace.as_mut() {
            let line = TraceLine {
                iter,
                center_norm: l2_norm(&c),
                value,
                gap: certified.is_finite().then_some(certified),
            };
            serde_json::to_writer(&mut *w, &line)?;
            w.write_all(b"\n")?;
        }

        if certified <= eps {
            break;
        }

        // Central cut along `cut`.
        let pg = mat_vec(&p, &cut);
        let s2 = dot(&cut, &pg);
        if !(s2.is_finite() && s2 > 0.0) {
            // Ellipsoid degenerated numerically; certificates so far stand.
            geometry_ok = false;
            break;
        }
        let s = s2.sqrt();
        let q: Vec<f64> = pg.iter().map(|v| v / s).collect();
        if d == 1 {
            c[0] -= q[0] / 2.0;
            p[0][0] /= 4.0;
        } else {
            for i in 0..d {
                c[i] -= q[i] / (df + 1.0);
            }
            let scale = df * df / (df * df - 1.0);
            for i in 0..d {
                for j in 0..d {
                    p[i][j] = scale * (p[i][j] - 2.0 / (df + 1.0) * q[i] * q[j]);
                }
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    let avg = 0.5 * (p[i][j] + p[j][i]);
                    p[i][j] = avg;
                    p[j][i] = avg;
                }
            }
        }
        ln_vol_ratio += ln_cut_factor;
    }

    // Refine once more from the incumbent, then settle the certificate
    // against the final ellipsoid.
    let start = best.as_ref().expect("at least one evaluation").z.clone();
    newton_polish(&mut obj, start, r_box, &mut records, &mut best)?;
    let b = best.expect("incumbent exists");
    if geometry_ok {
        let vol_gap = (ln_vol_ratio / df).exp() * var_box;
        certified = certified.min(vol_gap);
        let lower = minorant_bound(&records, &c, &p);
        if lower.is_finite() {
            certified = certified.min((b.f - lower).max(0.0));
        }
    }
    if !certified.is_finite() || certified > eps {
        return Err(Error::Unstable(format!(
            "could not certify gap <= {eps:.3e} within {max_iterations} iterations \
             (reached {certified:.3e})"
        )));
    }

    Ok(DualSolution {
        y_diag: embed(&b.z),
        f_value: b.f_big,
        certified_gap: certified,
        bounding_radius: r_box,
        iterations: obj.evals,
        marginal_residual: b.residual,
        kl_bound: certified,
        tv_bound: (2.0 * certified).sqrt(),
        frame,
    })
}

/// Barycentric entropy of a density matrix `ρ` (positive definite,
/// `tr ρ = 1`): the negated optimal value of the rank-one dual,
/// `H_b(ρ) = -min_Y F_ρ(Y)`, computed to additive accuracy `eps`.
///
/// `H_b` vanishes exactly at the barycenter `ρ = I/n` and grows as the
/// spectrum skews: it is the relative entropy of the rank-one projection
/// distribution tilted to have mean `ρ`.
pub fn barycentric_entropy(rho: &HermitianMatrix, eps: f64) -> Result<f64> {
    let oracle = PkOracle::new(1, DEFAULT_PREC);
    let sol = solve_dual(rho, 1, eps, &oracle)?;
    let h = -sol.f_value.to_f64();
    Ok(if h == 0.0 { 0.0 } else { h })
}

/// Distribution-closeness diagnostics from a certified gap: the pair
/// `(KL bound, TV bound) = (eps, sqrt(2 eps))`.
pub fn closeness_diagnostics(eps: f64) -> Result<(f64, f64)> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Invalid(format!("gap must be nonnegative, got {eps}")));
    }
    Ok((eps, (2.0 * eps).sqrt()))
}
