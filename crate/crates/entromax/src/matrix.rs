//! Hermitian matrices, eigendecomposition, and spectrum clustering.
//!
//! Everything downstream works in an eigenbasis: a Hermitian input `A` is
//! decomposed as `A = U diag(a) U*` with eigenvalues sorted in descending
//! order ([`diagonal_frame`]), and a real diagonal is compressed into a
//! [`Spectrum`], the list of distinct eigenvalues with multiplicities
//! ([`cluster_spectrum`]). The determinant oracles consume spectra; frames
//! carry results back to the original basis.
//!
//! Clustering matters because the evaluation matrices change shape at
//! eigenvalue collisions: nearly equal eigenvalues must be treated as one
//! confluent block, not as a catastrophically ill-conditioned pair of
//! distinct ones. Two values land in the same cluster when they are within
//! `tau * (1 + max_i |y_i|)` of the cluster's running mean, and clusters
//! are merged until their representatives are pairwise separated by more
//! than that threshold.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bigreal::{big, BigReal, DEFAULT_PREC};
use crate::{Error, Result};

/// Relative tolerance for accepting an input matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Tolerance on `||U* U - I||` for an eigenbasis.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Relative tolerance on eigendecomposition reconstruction error.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Default clustering tolerance for [`cluster_spectrum`].
pub const DEFAULT_TAU: f64 = 1e-9;

/// A square complex matrix validated and symmetrized to be exactly
/// Hermitian (`data == data.adjoint()` after construction).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Validates `data` as Hermitian to [`HERMITICITY_TOL`] (relative to
    /// the largest entry) and stores the exactly symmetrized part
    /// `(data + data*)/2` with real diagonal.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let n = data.nrows();
        if n == 0 || data.ncols() != n {
            return Err(Error::Invalid(format!(
                "expected a nonempty square matrix, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if !scale.is_finite() {
            return Err(Error::Invalid("matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let dev = (data[(i, j)] - data[(j, i)].conj()).norm();
                if dev > HERMITICITY_TOL * scale {
                    return Err(Error::Invalid(format!(
                        "matrix is not Hermitian: |a[{i}][{j}] - conj(a[{j}][{i}])| = {dev:.3e} \
                         exceeds {HERMITICITY_TOL:e} * {scale:.3e}"
                    )));
                }
            }
        }
        let mut sym = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let avg = (data[(i, j)] + data[(j, i)].conj()) * 0.5;
                sym[(i, j)] = if i == j { Complex64::new(avg.re, 0.0) } else { avg };
            }
        }
        Ok(HermitianMatrix { data: sym })
    }

    /// Builds from real and (optional) imaginary entry tables.
    pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = re.len();
        let check_shape = |rows: &[Vec<f64>], what: &str| -> Result<()> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Invalid(format!("{what} part is not an {n}x{n} table")));
            }
            Ok(())
        };
        check_shape(re, "real")?;
        if let Some(im) = im {
            check_shape(im, "imaginary")?;
        }
        let mut data = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let imv = im.map_or(0.0, |t| t[i][j]);
                data[(i, j)] = Complex64::new(re[i][j], imv);
            }
        }
        HermitianMatrix::new(data)
    }

    /// Real diagonal matrix.
    pub fn from_diag(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Invalid("empty diagonal".into()));
        }
        let n = d.len();
        let mut data = DMatrix::<Complex64>::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            data[(i, i)] = Complex64::new(v, 0.0);
        }
        HermitianMatrix::new(data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        HermitianMatrix::from_diag(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hilbert-Schmidt pairing `<A, B> = tr(A B)`, real for Hermitian
    /// arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.n(), other.n());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues in descending
/// order and the matching unitary of column eigenvectors.
///
/// Fails with [`Error::Unstable`] if the computed basis is not orthonormal
/// to [`ORTHONORMALITY_TOL`] or does not reconstruct the input to
/// [`RECONSTRUCTION_TOL`] relative to its Frobenius norm.
pub fn eigh(h: &HermitianMatrix) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = h.n();
    let se = h.data.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &se.eigenvectors.column(src));
    }

    let gram = u.adjoint() * &u;
    let mut ortho_err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            ortho_err = ortho_err.max((gram[(i, j)] - expect).norm());
        }
    }
    if ortho_err > ORTHONORMALITY_TOL {
        return Err(Error::Unstable(format!(
            "eigenbasis not orthonormal: ||U*U - I|| = {ortho_err:.3e}"
        )));
    }

    let mut recon = DMatrix::<Complex64>::zeros(n, n);
    for (c, &v) in vals.iter().enumerate() {
        let col = u.column(c);
        for i in 0..n {
            for j in 0..n {
                recon[(i, j)] += col[i] * col[j].conj() * v;
            }
        }
    }
    let err = (&recon - &h.data).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = RECONSTRUCTION_TOL * h.frobenius();
    if err > tol && err > 1e-15 {
        return Err(Error::Unstable(format!(
            "eigendecomposition reconstruction error {err:.3e} exceeds {tol:.3e}"
        )));
    }
    Ok((vals, u))
}

/// A Hermitian matrix presented in its own eigenbasis: `A = U diag(a) U*`
/// with `a` descending.
#[derive(Debug, Clone)]
pub struct DiagonalFrame {
    /// Unitary of column eigenvectors.
    pub u: DMatrix<Complex64>,
    /// Eigenvalues, descending.
    pub a: Vec<f64>,
}

impl DiagonalFrame {
    /// Conjugates a real diagonal (given in frame coordinates) back to the
    /// original basis: `U diag(d) U*`.
    pub fn from_diagonal(&self, d: &[f64]) -> Result<HermitianMatrix> {
        let n = self.a.len();
        if d.len() != n {
            return Err(Error::Invalid(format!(
                "diagonal length {} does not match frame dimension {n}",
                d.len()
            )));
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (c, &v) in d.iter().enumerate() {
            let col = self.u.column(c);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += col[i] * col[j].conj() * v;
                }
            }
        }
        HermitianMatrix::new(m)
    }

    /// Conjugates a Hermitian matrix given in frame coordinates back to
    /// the original basis: `U M U*`.
    pub fn conjugate(&self, m: &HermitianMatrix) -> Result<HermitianMatrix> {
        if m.n() != self.a.len() {
            return Err(Error::Invalid(format!(
                "matrix dimension {} does not match frame dimension {}",
                m.n(),
                self.a.len()
            )));
        }
        HermitianMatrix::new(&self.u * m.data() * self.u.adjoint())
    }
}

/// Diagonalizes `a`, returning eigenvalues (descending) and eigenvectors
/// as a [`DiagonalFrame`].
pub fn diagonal_frame(a: &HermitianMatrix) -> Result<DiagonalFrame> {
    let (vals, u) = eigh(a)?;
    Ok(DiagonalFrame { u, a: vals })
}

/// Distinct eigenvalues with multiplicities, strictly descending.
///
/// The distinct values are stored as exact [`BigReal`] promotions of the
/// `f64` cluster representatives, so downstream arbitrary-precision
/// arithmetic starts from exactly reproducible points.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    distinct: Vec<BigReal>,
    mult: Vec<usize>,
}

impl Spectrum {
    /// Builds a spectrum from strictly descending distinct values and
    /// their positive multiplicities.
    pub fn new(distinct: Vec<f64>, mult: Vec<usize>) -> Result<Self> {
        if distinct.is_empty() || distinct.len() != mult.len() {
            return Err(Error::Invalid(format!(
                "spectrum needs matching nonempty value/multiplicity lists, got {} and {}",
                distinct.len(),
                mult.len()
            )));
        }
        if distinct.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("spectrum values must be finite".into()));
        }
        if distinct.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Invalid("spectrum values must be strictly descending".into()));
        }
        if mult.iter().any(|&m| m == 0) {
            return Err(Error::Invalid("multiplicities must be positive".into()));
        }
        Ok(Spectrum {
            distinct: distinct.iter().map(|&v| big(DEFAULT_PREC, v)).collect(),
            mult,
        })
    }

    /// Total dimension `n = sum of multiplicities`.
    pub fn n(&self) -> usize {
        self.mult.iter().sum()
    }

    /// Number of distinct values.
    pub fn kappa(&self) -> usize {
        self.distinct.len()
    }

    /// Distinct values, strictly descending.
    pub fn distinct(&self) -> &[BigReal] {
        &self.distinct
    }

    pub fn distinct_f64(&self) -> Vec<f64> {
        self.distinct.iter().map(|v| v.to_f64()).collect()
    }

    /// Multiplicities, aligned with [`Spectrum::distinct`].
    pub fn mult(&self) -> &[usize] {
        &self.mult
    }

    /// `sum_i m_i lambda_i`, exact in [`BigReal`].
    pub fn trace(&self) -> BigReal {
        let mut t = big(DEFAULT_PREC, 0.0);
        for (v, &m) in self.distinct.iter().zip(&self.mult) {
            t += v.clone() * big(DEFAULT_PREC, m as f64);
        }
        t
    }

    /// Spectrum of `Y + c I` (exact shift of each distinct value).
    pub fn shifted(&self, c: f64) -> Spectrum {
        Spectrum {
            distinct: self.distinct.iter().map(|v| v.clone() + big(DEFAULT_PREC, c)).collect(),
            mult: self.mult.clone(),
        }
    }

    /// Spectrum of `-Y`: values negated, order reversed to stay descending.
    pub fn negated(&self) -> Spectrum {
        Spectrum {
            distinct: self.distinct.iter().rev().map(|v| -v.clone()).collect(),
            mult: self.mult.iter().rev().copied().collect(),
        }
    }

    /// Expands a per-cluster vector (aligned with [`Spectrum::distinct`])
    /// to a per-coordinate vector by repeating each entry `m_i` times.
    pub fn expand<T: Clone>(&self, per_cluster: &[T]) -> Result<Vec<T>> {
        if per_cluster.len() != self.kappa() {
            return Err(Error::Invalid(format!(
                "expected {} per-cluster entries, got {}",
                self.kappa(),
                per_cluster.len()
            )));
        }
        let mut out = Vec::with_capacity(self.n());
        for (v, &m) in per_cluster.iter().zip(&self.mult) {
            out.extend(std::iter::repeat_n(v.clone(), m));
        }
        Ok(out)
    }

    /// Index of the cluster whose representative is closest to each `y_i`.
    pub fn assign(&self, y: &[f64]) -> Vec<usize> {
        let reps = self.distinct_f64();
        y.iter()
            .map(|&v| {
                let mut best = 0;
                for (i, r) in reps.iter().enumerate() {
                    if (v - r).abs() < (v - reps[best]).abs() {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// Clusters a real vector into a [`Spectrum`].
///
/// Values within `tau * (1 + max_i |y_i|)` of a cluster's running mean
/// merge into it; afterwards clusters whose representatives are not
/// separated by more than the same threshold are merged until a fixpoint.
/// Representatives are arithmetic means of cluster members.
pub fn cluster_spectrum(y: &[f64], tau: f64) -> Result<Spectrum> {
    if y.is_empty() {
        return Err(Error::Invalid("cannot cluster an empty vector".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("cluster input must be finite".into()));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Invalid(format!("cluster tolerance must be >= 0, got {tau}")));
    }
    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = tau * scale;

    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // (sum, count) per cluster, in descending order of representative.
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match clusters.last_mut() {
            Some((sum, count)) if (v - *sum / *count as f64).abs() <= thr => {
                *sum += v;
                *count += 1;
            }
            _ => clusters.push((v, 1)),
        }
    }
    // Merge adjacent clusters until representatives are separated by > thr.
    loop {
        let mut merged = false;
        let mut i = 0;
        while i + 1 < clusters.len() {
            let ri = clusters[i].0 / clusters[i].1 as f64;
            let rj = clusters[i + 1].0 / clusters[i + 1].1 as f64;
            if ri - rj <= thr {
                clusters[i].0 += clusters[i + 1].0;
                clusters[i].1 += clusters[i + 1].1;
                clusters.remove(i + 1);
                merged = true;
            } else {
                i += 1;
            }
        }
        if !merged {
            break;
        }
    }

    let distinct: Vec<f64> = clusters.iter().map(|(s, c)| s / *c as f64).collect();
    let mult: Vec<usize> = clusters.iter().map(|(_, c)| *c).collect();
    Spectrum::new(distinct, mult)
}
