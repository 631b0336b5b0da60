//! JSON exchange formats for matrices and command outputs.
//!
//! Matrices travel as
//!
//! ```text
//! {"n": 2, "re": [[0.7, 0.0], [0.0, 0.3]], "im": [[0.0, 0.0], [0.0, 0.0]]}
//! ```
//!
//! where `im` may be omitted for real matrices. Extended-precision scalars
//! are embedded as *raw number tokens* rather than `f64` fields: the decimal
//! rendering from [`bigreal::format_decimal`] carries one digit per
//! ~3.32 bits of working precision, so every digit the evaluation produced
//! survives a trip through any standards-compliant JSON parser and can be
//! recovered with [`bigreal::parse_decimal`] without loss.
//!
//! All output structs serialize with a fixed field order and rely only on
//! deterministic formatting (shortest-round-trip floats, fixed-digit decimal
//! tokens), so identical inputs produce byte-identical output.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use std::path::Path;

use crate::bigreal::{self, BigReal};
use crate::matrix::HermitianMatrix;
use crate::outer::SymmetricMatrix;
use crate::solver::DualSolution;
use crate::{Error, Result};

type Complex64 = Complex<f64>;

/// Entry-table form of a complex square matrix.
///
/// `im` is omitted on output when every imaginary entry is exactly zero,
/// and defaults to the zero table on input.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    /// Captures an arbitrary complex square matrix (no symmetry required).
    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        let re: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
        let all_real = im.iter().all(|row| row.iter().all(|&v| v == 0.0));
        MatrixJson { n, re, im: if all_real { None } else { Some(im) } }
    }

    pub fn from_hermitian(m: &HermitianMatrix) -> Self {
        MatrixJson::from_complex(m.data())
    }

    pub fn from_symmetric(m: &SymmetricMatrix) -> Self {
        let n = m.n();
        let re = (0..n).map(|i| (0..n).map(|j| m.data()[(i, j)]).collect()).collect();
        MatrixJson { n, re, im: None }
    }

    fn check_n(&self) -> Result<()> {
        if self.re.len() != self.n {
            return Err(Error::Invalid(format!(
                "matrix field n = {} does not match {} rows of re",
                self.n,
                self.re.len()
            )));
        }
        Ok(())
    }

    /// Validates shape and hermiticity and builds the matrix.
    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        self.check_n()?;
        HermitianMatrix::from_parts(&self.re, self.im.as_deref())
    }

    /// Real symmetric view; rejects any nonzero imaginary entry.
    pub fn to_symmetric(&self) -> Result<SymmetricMatrix> {
        self.check_n()?;
        if let Some(im) = &self.im {
            if im.iter().any(|row| row.iter().any(|&v| v != 0.0)) {
                return Err(Error::Invalid(
                    "expected a real matrix, but im has nonzero entries".into(),
                ));
            }
        }
        SymmetricMatrix::from_rows(&self.re)
    }
}

/// Reads and parses one matrix file.
pub fn read_matrix(path: &Path) -> Result<MatrixJson> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let m: MatrixJson = serde_json::from_str(&text)?;
    Ok(m)
}

/// Renders an extended-precision scalar as a raw JSON number token.
///
/// The token preserves all `decimal_digits(prec)` digits; embedding it via
/// [`RawValue`] keeps serde_json from rounding it through an `f64`.
pub fn number_token(x: &BigReal) -> Result<Box<RawValue>> {
    let s = bigreal::format_decimal(x)?;
    RawValue::from_string(s).map_err(Error::from)
}

/// Output of `eval`: the log-mass value and its gradient.
///
/// `E` is a full-precision number token, or the string `"Infinite"` when the
/// rank-one Gaussian integral diverges (non-positive-definite input), in
/// which case `grad` is omitted. For the projection manifold `grad` is a
/// per-eigenvalue vector; for the outer-product manifold it is the gradient
/// matrix as row tables.
#[derive(Debug, Serialize)]
pub struct EvalJson {
    #[serde(rename = "E")]
    pub e: Box<RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad: Option<serde_json::Value>,
}

impl EvalJson {
    pub fn finite(e: &BigReal, grad: serde_json::Value) -> Result<Self> {
        Ok(EvalJson { e: number_token(e)?, grad: Some(grad) })
    }

    pub fn infinite() -> Self {
        let e = RawValue::from_string("\"Infinite\"".into()).expect("literal is valid JSON");
        EvalJson { e, grad: None }
    }
}

/// Unitary change of basis serialized alongside a solution: `u` holds the
/// eigenvector columns, `a` the eigenvalues in descending order.
#[derive(Debug, Serialize)]
pub struct FrameJson {
    pub u: MatrixJson,
    pub a: Vec<f64>,
}

/// Output of `solve`: the certified dual optimizer in the marginal's
/// eigenframe, with the optimality gap and the closeness bounds it implies.
#[derive(Debug, Serialize)]
pub struct SolveJson {
    #[serde(rename = "Y_diag")]
    pub y_diag: Vec<f64>,
    #[serde(rename = "F_value")]
    pub f_value: Box<RawValue>,
    pub certified_gap: f64,
    pub bounding_radius: f64,
    pub iterations: u64,
    pub marginal_residual: f64,
    pub kl_bound: f64,
    pub tv_bound: f64,
    pub frame: FrameJson,
}

impl SolveJson {
    pub fn from_solution(s: &DualSolution) -> Result<Self> {
        Ok(SolveJson {
            y_diag: s.y_diag.clone(),
            f_value: number_token(&s.f_value)?,
            certified_gap: s.certified_gap,
            bounding_radius: s.bounding_radius,
            iterations: s.iterations,
            marginal_residual: s.marginal_residual,
            kl_bound: s.kl_bound,
            tv_bound: s.tv_bound,
            frame: FrameJson {
                u: MatrixJson::from_complex(&s.frame.u),
                a: s.frame.a.clone(),
            },
        })
    }
}

/// Output of `entropy`.
#[derive(Debug, Serialize)]
pub struct EntropyJson {
    #[serde(rename = "H_b")]
    pub h_b: f64,
}

/// Output of `gw`: the closed-form stationary point and the log-mass of the
/// input matrix under the rank-one Gaussian integral.
#[derive(Debug, Serialize)]
pub struct GwJson {
    #[serde(rename = "Y_star")]
    pub y_star: MatrixJson,
    #[serde(rename = "E")]
    pub e: Box<RawValue>,
}

/// Output of `bound`.
#[derive(Debug, Serialize)]
pub struct BoundJson {
    #[serde(rename = "R")]
    pub r: f64,
}

/// One line of `sample` output: the matrix entry tables plus the seed that
/// produced the stream and the sample's index within it.
#[derive(Debug, Serialize, Deserialize)]
pub struct SampleLineJson {
    #[serde(flatten)]
    pub matrix: MatrixJson,
    pub seed: u64,
    pub index: u64,
}
