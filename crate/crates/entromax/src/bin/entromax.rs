//! Command-line front end for the maximum-entropy toolkit.
//!
//! Every subcommand reads matrices as `{"n": …, "re": [[…]…], "im": [[…]…]}`
//! JSON files and prints a single JSON object on stdout. Extended-precision
//! values appear as full-length decimal number tokens. Output is
//! byte-identical for identical inputs, flags, seed and precision.
//!
//! Exit codes: 0 on success, 1 on validation or I/O errors, 2 on numeric
//! instability, 3 when a marginal is not strictly interior.
//!
//! The working precision defaults to 256 bits and can be overridden with
//! the `ENTROMAX_PRECISION` environment variable.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use entromax::bigreal::{validate_prec, DEFAULT_PREC};
use entromax::io::{
    read_matrix, BoundJson, EntropyJson, EvalJson, GwJson, MatrixJson, SampleLineJson, SolveJson,
};
use entromax::matrix::diagonal_frame;
use entromax::outer::{eval_ev1, grad_ev1, gw_optimum, Ev1, SymmetricPD};
use entromax::sampler::sample_p1_batch;
use entromax::solver::{solve_dual_with, PkOracle, SolveOptions};
use entromax::{bounds, Error, Result};

const PRECISION_VAR: &str = "ENTROMAX_PRECISION";

#[derive(Parser)]
#[command(name = "entromax", version, about = "Maximum-entropy distributions on matrix manifolds")]
struct Cli {
    /// Spectrum clustering tolerance (relative to the largest eigenvalue).
    #[arg(long, global = true, default_value_t = 1e-9)]
    cluster_tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the log-mass function E and its gradient at a point.
    Eval {
        /// Manifold: "pk" (rank-k projections) or "v1" (rank-1 outer products).
        #[arg(long, value_parser = ["pk", "v1"])]
        manifold: String,
        /// Projection rank (pk only).
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Matrix file holding the evaluation point Y.
        #[arg(long)]
        y: PathBuf,
    },
    /// Solve the dual program for a marginal and print the certified optimizer.
    Solve {
        /// Matrix file holding the target marginal A (tr A = k).
        #[arg(long)]
        marginal: PathBuf,
        /// Projection rank.
        #[arg(long)]
        k: usize,
        /// Certified duality-gap target.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Write one JSON line per solver step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Barycentric entropy of a density matrix.
    Entropy {
        /// Matrix file holding the density ρ (tr ρ = 1).
        #[arg(long)]
        rho: PathBuf,
        /// Accuracy target for |H̄ - H_b(ρ)|.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Draw rank-one projections from the tilted distribution e^{-<Y,X>} dμ₁.
    Sample {
        /// Matrix file holding the tilt Y.
        #[arg(long)]
        y: PathBuf,
        /// Number of samples.
        #[arg(long)]
        n: usize,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; one JSON projection per line, ordered by index.
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form Gaussian-rounding optimum for an SPD matrix.
    Gw {
        /// Matrix file holding the SPD target A.
        #[arg(long)]
        a: PathBuf,
    },
    /// Bounding radius for the dual optimizer at interiority margin eta.
    Bound {
        /// Ambient dimension.
        #[arg(long)]
        n: usize,
        /// Projection rank.
        #[arg(long)]
        k: usize,
        /// Interiority margin of the marginal.
        #[arg(long)]
        eta: f64,
    },
}

fn precision_from_env() -> Result<u32> {
    match std::env::var(PRECISION_VAR) {
        Ok(text) => {
            let bits: u32 = text.trim().parse().map_err(|_| {
                Error::Invalid(format!("{PRECISION_VAR} must be a positive integer, got {text:?}"))
            })?;
            validate_prec(bits)?;
            Ok(bits)
        }
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_PREC),
        Err(e) => Err(Error::Invalid(format!("{PRECISION_VAR} is not valid unicode: {e}"))),
    }
}

fn emit<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let prec = precision_from_env()?;
    let tau = cli.cluster_tol;

    match cli.command {
        Command::Eval { manifold, k, y } => {
            let point = read_matrix(&y)?;
            match manifold.as_str() {
                "pk" => {
                    let frame = diagonal_frame(&point.to_hermitian()?)?;
                    let oracle = PkOracle { k, prec, tau };
                    let (e, grad) = entromax::solver::FirstOrderOracle::eval(&oracle, &frame.a)?;
                    emit(&EvalJson::finite(&e, serde_json::json!(grad))?)
                }
                "v1" => {
                    let sym = point.to_symmetric()?;
                    match eval_ev1(&sym, prec)? {
                        Ev1::Finite(e) => {
                            let g = grad_ev1(&sym)?;
                            let rows: Vec<Vec<f64>> = (0..sym.n())
                                .map(|i| (0..sym.n()).map(|j| g[(i, j)]).collect())
                                .collect();
                            emit(&EvalJson::finite(&e, serde_json::json!(rows))?)
                        }
                        Ev1::Infinite => emit(&EvalJson::infinite()),
                    }
                }
                other => Err(Error::Invalid(format!("unknown manifold {other:?}"))),
            }
        }
        Command::Solve { marginal, k, eps, trace } => {
            let a = read_matrix(&marginal)?.to_hermitian()?;
            let oracle = PkOracle { k, prec, tau };
            let opts = SolveOptions { trace, ..SolveOptions::default() };
            let sol = solve_dual_with(&a, k, eps, &oracle, &opts)?;
            emit(&SolveJson::from_solution(&sol)?)
        }
        Command::Entropy { rho, eps } => {
            let density = read_matrix(&rho)?.to_hermitian()?;
            let oracle = PkOracle { k: 1, prec, tau };
            let sol = entromax::solver::solve_dual(&density, 1, eps, &oracle)?;
            let h = -sol.f_value.to_f64();
            emit(&EntropyJson { h_b: if h == 0.0 { 0.0 } else { h } })
        }
        Command::Sample { y, n, seed, out } => {
            let tilt = read_matrix(&y)?.to_hermitian()?;
            let samples = sample_p1_batch(&tilt, n, seed, prec)?;
            let file = std::fs::File::create(&out)
                .map_err(|e| Error::Invalid(format!("cannot create {}: {e}", out.display())))?;
            let mut w = std::io::BufWriter::new(file);
            for (index, m) in samples.iter().enumerate() {
                let line = SampleLineJson {
                    matrix: MatrixJson::from_hermitian(m),
                    seed,
                    index: index as u64,
                };
                writeln!(w, "{}", serde_json::to_string(&line)?)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Gw { a } => {
            let sym = read_matrix(&a)?.to_symmetric()?;
            let target = SymmetricPD::new(sym)?;
            let y_star = gw_optimum(&target)?;
            let e = match eval_ev1(target.matrix(), prec)? {
                Ev1::Finite(e) => e,
                Ev1::Infinite => {
                    return Err(Error::Invalid(
                        "target is not positive definite at working precision".into(),
                    ))
                }
            };
            emit(&GwJson {
                y_star: MatrixJson::from_symmetric(y_star.matrix()),
                e: entromax::io::number_token(&e)?,
            })
        }
        Command::Bound { n, k, eta } => emit(&BoundJson { r: bounds::bound_pk(n, k, eta)? }),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
