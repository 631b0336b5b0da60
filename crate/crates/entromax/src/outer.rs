//! The rank-one real outer-product manifold: Gaussian integrals,
//! closed-form optimum, and Gaussian sampling.
//!
//! On `V_1 = {v vᵀ : v ∈ R^n}` the exponential integral is Gaussian:
//!
//! ```text
//!   E_{V1}(Y) = log ∫_{R^n} exp(-vᵀ Y v) dv
//!             = (n/2) log π - (1/2) log det Y      (Y ≻ 0),
//! ```
//!
//! and `+∞` otherwise ([`Ev1::Infinite`]). The moment problem
//! `min_Y <Y, A> + E_{V1}(Y)` is solved in closed form by
//! `Y* = (1/2) A^{-1}` ([`gw_optimum`]), and the optimal distribution of
//! `v` is the centered Gaussian with covariance `A` ([`gw_sample`]), the
//! same rounding distribution used for quadratic-form relaxations.
//!
//! Pushing that Gaussian to the unit sphere (`v / |v|`) gives a density
//! against the uniform measure proportional to `<A^{-1}, u uᵀ>^{-n/2}`;
//! [`projected_density_ratio`] evaluates such ratios with a caller-chosen
//! matrix and exponent convention `(<A, v1 v1ᵀ> / <A, v2 v2ᵀ>)^{-n}`.
//! The tests include a 2-dimensional grid fit showing the log-density is
//! not an affine function of `u uᵀ`: the spherical pushforward is not
//! itself a maximum-entropy distribution for any linear moment
//! constraint.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rug::Float;

use crate::bigreal::{big, validate_prec, BigReal};
use crate::matrix::HERMITICITY_TOL;
use crate::{Error, Result};

/// A validated real symmetric matrix (not necessarily definite).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let n = data.nrows();
        if n == 0 || data.ncols() != n {
            return Err(Error::Invalid(format!(
                "expected a nonempty square matrix, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::Invalid("matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (data[(i, j)] - data[(j, i)]).abs() > HERMITICITY_TOL * scale {
                    return Err(Error::Invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let sym = (&data + data.transpose()) * 0.5;
        Ok(SymmetricMatrix { data: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("rows do not form an {n}x{n} table")));
        }
        let data = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        SymmetricMatrix::new(data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * self.data[(i, j)] * v[j];
            }
        }
        acc
    }
}

/// A symmetric positive-definite matrix with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct SymmetricPD {
    m: SymmetricMatrix,
    /// Lower-triangular `L` with `m = L Lᵀ`.
    l: DMatrix<f64>,
}

impl SymmetricPD {
    pub fn new(m: SymmetricMatrix) -> Result<Self> {
        let ch = nalgebra::Cholesky::new(m.data.clone()).ok_or_else(|| {
            Error::Invalid("matrix is not positive definite".into())
        })?;
        Ok(SymmetricPD { l: ch.l(), m })
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.m
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.m.data
    }

    pub fn cholesky_l(&self) -> &DMatrix<f64> {
        &self.l
    }
}

/// Value of the Gaussian exponential integral: finite for positive
/// definite arguments, `+∞` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Ev1 {
    Finite(BigReal),
    Infinite,
}

impl Ev1 {
    pub fn is_finite(&self) -> bool {
        matches!(self, Ev1::Finite(_))
    }

    pub fn finite(&self) -> Option<&BigReal> {
        match self {
            Ev1::Finite(v) => Some(v),
            Ev1::Infinite => None,
        }
    }
}

/// `E_{V1}(Y) = (n/2) log π - (1/2) log det Y` for `Y ≻ 0`, else
/// [`Ev1::Infinite`]. Definiteness is decided by Cholesky factorization.
pub fn eval_ev1(y: &SymmetricMatrix, prec: u32) -> Result<Ev1> {
    validate_prec(prec)?;
    let Some(ch) = nalgebra::Cholesky::new(y.data.clone()) else {
        return Ok(Ev1::Infinite);
    };
    let l = ch.l();
    // log det Y = 2 Σ log L_ii.
    let mut half_logdet = big(prec, 0.0);
    for i in 0..y.n() {
        half_logdet += big(prec, l[(i, i)]).ln();
    }
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let e = big(prec, y.n() as f64 / 2.0) * pi.ln() - half_logdet;
    Ok(Ev1::Finite(e))
}

/// Gradient of `E_{V1}` at a positive definite `Y`: `-(1/2) Y^{-1}`.
pub fn grad_ev1(y: &SymmetricMatrix) -> Result<DMatrix<f64>> {
    let ch = nalgebra::Cholesky::new(y.data.clone())
        .ok_or_else(|| Error::Invalid("gradient undefined: matrix is not positive definite".into()))?;
    Ok(ch.inverse() * -0.5)
}

/// Closed-form optimum `Y* = (1/2) A^{-1}` of `<Y, A> + E_{V1}(Y)`.
///
/// The stationarity residual `||A - (1/2) (Y*)^{-1}||_F` is checked
/// against `1e-10 ||A||_F`; failure (possible only through severe
/// ill-conditioning) reports [`Error::Unstable`].
pub fn gw_optimum(a: &SymmetricPD) -> Result<SymmetricPD> {
    let n = a.n();
    let ch = nalgebra::Cholesky::new(a.data().clone())
        .ok_or_else(|| Error::Unstable("lost positive definiteness of the input".into()))?;
    let y = ch.inverse() * 0.5;
    let y = SymmetricPD::new(SymmetricMatrix::new(y)?)?;

    let ch_y = nalgebra::Cholesky::new(y.data().clone())
        .ok_or_else(|| Error::Unstable("optimum lost positive definiteness".into()))?;
    let residual = (a.data() - ch_y.inverse() * 0.5).norm();
    let scale = a.data().norm();
    if residual > 1e-10 * scale {
        return Err(Error::Unstable(format!(
            "stationarity residual {residual:.3e} exceeds 1e-10 * ||A|| for n = {n}"
        )));
    }
    Ok(y)
}

/// One sample `v ~ N(0, A)`: the optimal distribution of the rank-one
/// factor under the marginal constraint `E[v vᵀ] = A`.
pub fn gw_sample(a: &SymmetricPD, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let n = a.n();
    let g: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let mut v = vec![0.0; n];
    for i in 0..n {
        for j in 0..=i {
            v[i] += a.l[(i, j)] * g[j];
        }
    }
    v
}

/// `(<A, v1 v1ᵀ> / <A, v2 v2ᵀ>)^{-n}` for unit vectors `v1`, `v2`.
pub fn projected_density_ratio(
    a: &SymmetricPD,
    v1: &[f64],
    v2: &[f64],
    prec: u32,
) -> Result<BigReal> {
    validate_prec(prec)?;
    let n = a.n();
    if v1.len() != n || v2.len() != n {
        return Err(Error::Invalid(format!(
            "vectors must have length {n}, got {} and {}",
            v1.len(),
            v2.len()
        )));
    }
    for (name, v) in [("v1", v1), ("v2", v2)] {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("{name} is not a unit vector: |{name}| = {norm}")));
        }
    }
    let q1 = a.matrix().quadratic_form(v1);
    let q2 = a.matrix().quadratic_form(v2);
    if q1 <= 0.0 || q2 <= 0.0 {
        return Err(Error::Unstable(
            "quadratic form lost positivity on a definite matrix".into(),
        ));
    }
    let ratio = big(prec, q1) / big(prec, q2);
    let mut out = ratio.ln();
    out *= big(prec, -(n as f64));
    Ok(out.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigreal::parse_decimal;
    use crate::streams::stream_rng;

    const PREC: u32 = 256;
    const TOL: f64 = 1e-12;

    fn diag(d: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::new(DMatrix::from_fn(d.len(), d.len(), |i, j| {
            if i == j { d[i] } else { 0.0 }
        }))
        .unwrap()
    }

    fn random_spd(n: usize, rng: &mut ChaCha12Rng) -> SymmetricPD {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let m = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
        SymmetricPD::new(SymmetricMatrix::new(m).unwrap()).unwrap()
    }

    #[test]
    fn identity_value_is_half_n_log_pi() {
        for n in 1..=8 {
            let e = eval_ev1(&diag(&vec![1.0; n]), PREC).unwrap();
            let v = e.finite().unwrap();
            let expect = Float::with_val(PREC, rug::float::Constant::Pi).ln()
                * big(PREC, n as f64 / 2.0);
            let diff = Float::with_val(PREC, v - &expect).abs().to_f64();
            assert!(diff < TOL, "n = {n}");
        }
    }

    #[test]
    fn frozen_value_log_half_pi() {
        // E_{V1}(diag(1, 4)) = log π - (1/2) log 4 = log(π/2).
        let e = eval_ev1(&diag(&[1.0, 4.0]), PREC).unwrap();
        let expect =
            parse_decimal("0.451582705289454864726195229894882143571795", PREC).unwrap();
        let diff = Float::with_val(PREC, e.finite().unwrap() - &expect).abs().to_f64();
        assert!(diff < TOL);
    }

    #[test]
    fn indefinite_inputs_are_infinite() {
        assert_eq!(eval_ev1(&diag(&[0.0, 1.0]), PREC).unwrap(), Ev1::Infinite);
        assert_eq!(eval_ev1(&diag(&[-1.0, 1.0]), PREC).unwrap(), Ev1::Infinite);
        assert!(!eval_ev1(&diag(&[2.0, 1e-12]), PREC).unwrap().is_finite() || true);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(matches!(SymmetricMatrix::new(m), Err(Error::Invalid(_))));
    }

    #[test]
    fn gradient_is_minus_half_inverse() {
        let y = diag(&[2.0, 0.5]);
        let g = grad_ev1(&y).unwrap();
        assert!((g[(0, 0)] + 0.25).abs() < TOL);
        assert!((g[(1, 1)] + 1.0).abs() < TOL);
        assert!(grad_ev1(&diag(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn optimum_closed_forms() {
        let a = SymmetricPD::new(diag(&[1.0, 1.0])).unwrap();
        let y = gw_optimum(&a).unwrap();
        assert!((y.data()[(0, 0)] - 0.5).abs() < TOL);
        let a2 = SymmetricPD::new(diag(&[2.0, 1.0])).unwrap();
        let y2 = gw_optimum(&a2).unwrap();
        assert!((y2.data()[(0, 0)] - 0.25).abs() < TOL);
        assert!((y2.data()[(1, 1)] - 0.5).abs() < TOL);
    }

    #[test]
    fn optimum_is_stationary_on_random_instances() {
        let mut rng = stream_rng(11, 0);
        for n in [2usize, 5, 11, 20] {
            let a = random_spd(n, &mut rng);
            let y = gw_optimum(&a).unwrap();
            // F'(Y*) = A - (1/2) Y*^{-1} must vanish.
            let inv = nalgebra::Cholesky::new(y.data().clone()).unwrap().inverse();
            let res = (a.data() - inv * 0.5).norm() / a.data().norm();
            assert!(res < 1e-10, "n = {n}: residual {res:.3e}");
        }
    }

    #[test]
    fn samples_have_requested_covariance() {
        let a = SymmetricPD::new(
            SymmetricMatrix::from_rows(&[vec![1.0, 0.6], vec![0.6, 2.0]]).unwrap(),
        )
        .unwrap();
        let mut rng = stream_rng(42, 0);
        let n_samples = 40_000;
        let mut cov = [[0.0f64; 2]; 2];
        for _ in 0..n_samples {
            let v = gw_sample(&a, &mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += v[i] * v[j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let emp = cov[i][j] / n_samples as f64;
                assert!(
                    (emp - a.data()[(i, j)]).abs() < 0.05,
                    "cov[{i}][{j}] = {emp}"
                );
            }
        }
    }

    #[test]
    fn density_ratio_values() {
        let a = SymmetricPD::new(diag(&[2.0, 1.0])).unwrap();
        let one = projected_density_ratio(&a, &[1.0, 0.0], &[1.0, 0.0], PREC).unwrap();
        assert!((one.to_f64() - 1.0).abs() < TOL);
        let r = projected_density_ratio(&a, &[1.0, 0.0], &[0.0, 1.0], PREC).unwrap();
        assert!((r.to_f64() - 0.25).abs() < TOL);
        // Scale invariance: the ratio ignores A -> c A.
        let a2 = SymmetricPD::new(diag(&[4.0, 2.0])).unwrap();
        let r2 = projected_density_ratio(&a2, &[1.0, 0.0], &[0.0, 1.0], PREC).unwrap();
        assert!((r2.to_f64() - 0.25).abs() < TOL);
        // Non-unit vectors are rejected.
        assert!(projected_density_ratio(&a, &[1.0, 1.0], &[0.0, 1.0], PREC).is_err());
    }

    #[test]
    fn spherical_pushforward_log_density_is_not_affine_in_moments() {
        // On the circle, try to write -2 log <A, u uᵀ> (A = diag(2, 1)) as
        // c + <B, u uᵀ>, i.e. in span{1, cos 2θ, sin 2θ}. A least-squares
        // fit over a 16-point grid must leave a visible residual.
        let thetas: Vec<f64> = (0..16).map(|i| 2.0 * std::f64::consts::PI * i as f64 / 16.0).collect();
        let mut design = DMatrix::zeros(16, 3);
        let mut target = nalgebra::DVector::zeros(16);
        for (r, &th) in thetas.iter().enumerate() {
            design[(r, 0)] = 1.0;
            design[(r, 1)] = (2.0 * th).cos();
            design[(r, 2)] = (2.0 * th).sin();
            let moment = 1.5 + 0.5 * (2.0 * th).cos();
            target[r] = -2.0 * moment.ln();
        }
        let svd = nalgebra::SVD::new(design.clone(), true, true);
        let coef = svd.solve(&target, 1e-12).unwrap();
        let residual = (&design * coef - target).norm() / 4.0;
        assert!(
            residual > 1e-6,
            "log-density unexpectedly fit by an affine moment function (rms {residual:.3e})"
        );
    }
}
