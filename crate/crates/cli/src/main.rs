//! Command-line front end: synthetic data generation, solving, and
//! smoothness checking for penalized orthogonal NMF.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration, 3 numeric or
//! internal-consistency failures (including a failed smoothness
//! certificate from `check`).

mod matfile;

use std::fmt;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use bpalm::onmf::{self, metrics, nndsvd_init, random_init, synthetic_onmf, OnmfProblem};
use bpalm::{
    continuation_run, solve, write_trace_csv, Error as CoreError, SolveResult, StageBudget,
    StepMode,
};
use matfile::{read_matrix, write_matrix, Matrix, MatrixFormat};

#[derive(Parser)]
#[command(
    name = "bpalm",
    version,
    about = "Bregman proximal alternating minimization for orthogonal NMF"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Fixed steps just below 1/L_i.
    Bpalm,
    /// Backtracking warm-started from the last accepted estimates.
    Abpalm1,
    /// Backtracking restarted from the initial estimates every cycle.
    Abpalm2,
}

impl Algorithm {
    fn mode(self) -> StepMode {
        match self {
            Algorithm::Bpalm => StepMode::Fixed,
            Algorithm::Abpalm1 => StepMode::AdaptiveWarm,
            Algorithm::Abpalm2 => StepMode::AdaptiveRestart,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Algorithm::Bpalm => "bpalm",
            Algorithm::Abpalm1 => "abpalm1",
            Algorithm::Abpalm2 => "abpalm2",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    Nndsvd,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatKind {
    Csv,
    Bplm,
}

impl From<FormatKind> for MatrixFormat {
    fn from(f: FormatKind) -> Self {
        match f {
            FormatKind::Csv => MatrixFormat::Csv,
            FormatKind::Bplm => MatrixFormat::Bplm,
        }
    }
}

#[derive(Clone, Copy)]
struct Dims(usize, usize, usize);

fn parse_dims(s: &str) -> Result<Dims, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected m,n,r".into());
    }
    let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse()).collect();
    let nums = nums.map_err(|e| format!("bad dimension: {e}"))?;
    Ok(Dims(nums[0], nums[1], nums[2]))
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance: X = U V plus relative noise, with V
    /// orthogonal nonnegative. Writes X and the ground-truth factors.
    Generate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_x: PathBuf,
        #[arg(long)]
        out_u: PathBuf,
        #[arg(long)]
        out_v: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatKind::Csv)]
        format: FormatKind,
    },
    /// Factorize a matrix; writes a per-iteration trace CSV and a key=value
    /// result summary.
    Solve {
        /// Matrix file (CSV or BPLM binary, sniffed by magic bytes).
        input: PathBuf,
        #[arg(long, value_enum)]
        alg: Algorithm,
        #[arg(long)]
        r: usize,
        /// Penalty weight on ||I - V V^T||_F^2 (fixed-penalty runs).
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha2: f64,
        #[arg(long, default_value_t = 1.0)]
        beta1: f64,
        #[arg(long, default_value_t = 1.0)]
        beta2: f64,
        /// Stopping tolerance on the summed block Bregman gaps.
        #[arg(long, default_value_t = 2e-9)]
        eps: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long)]
        max_seconds: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = InitKind::Nndsvd)]
        init: InitKind,
        /// Increase the penalty geometrically, warm-starting each stage.
        #[arg(long)]
        continuation: bool,
        /// Initial penalty for continuation runs.
        #[arg(long, default_value_t = 10.0)]
        lambda0: f64,
        /// Per-stage penalty growth factor.
        #[arg(long, default_value_t = 1.5)]
        factor: f64,
        /// Stage budget in seconds (requires --max-seconds as the total).
        #[arg(long)]
        stage_seconds: Option<f64>,
        /// Stage budget in iterations (uses --max-iters as the total).
        #[arg(long)]
        stage_iters: Option<usize>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        result_out: Option<PathBuf>,
    },
    /// Print the smoothness constants and a sampled certificate of the
    /// per-block upper estimates. Exits 0 only if no violation exceeds 1e-8.
    Check {
        /// Matrix file; omit to use a synthetic instance.
        input: Option<PathBuf>,
        /// Synthetic dimensions m,n,r used when no input file is given.
        #[arg(long, value_parser = parse_dims, default_value = "4,30,2")]
        synthetic: Dims,
        /// Rank (required with an input file; the synthetic r otherwise).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha2: f64,
        #[arg(long, default_value_t = 1.0)]
        beta1: f64,
        #[arg(long, default_value_t = 1.0)]
        beta2: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Check this constant for the U block instead of the derived L1.
        #[arg(long)]
        l1_override: Option<f64>,
        /// Check this constant for the V block instead of the derived L2.
        #[arg(long)]
        l2_override: Option<f64>,
    },
}

enum CliError {
    Io(String, io::Error),
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(what, e) => write!(f, "{what}: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) => 1,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::Capability(_) => 2,
                _ => 3,
            },
        }
    }
}

fn io_ctx<T>(what: &str, r: io::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Io(what.to_string(), e))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_matrix(dm: &DMatrix<f64>) -> Matrix {
    let (rows, cols) = (dm.nrows(), dm.ncols());
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            data.push(dm[(i, j)]);
        }
    }
    Matrix { rows, cols, data }
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Generate {
            m,
            n,
            r,
            noise,
            seed,
            out_x,
            out_u,
            out_v,
            format,
        } => {
            let (x, truth) = synthetic_onmf::<f64>(m, n, r, noise, seed)?;
            let fmt: MatrixFormat = format.into();
            io_ctx("writing X", write_matrix(&out_x, &to_matrix(&x), fmt))?;
            io_ctx("writing U", write_matrix(&out_u, &to_matrix(&truth.u), fmt))?;
            io_ctx("writing V", write_matrix(&out_v, &to_matrix(&truth.v), fmt))?;
            println!("generated {m}x{n} instance, rank {r}, noise {noise}, seed {seed}");
            Ok(0)
        }
        Command::Solve {
            input,
            alg,
            r,
            lambda,
            alpha2,
            beta1,
            beta2,
            eps,
            max_iters,
            max_seconds,
            seed,
            init,
            continuation,
            lambda0,
            factor,
            stage_seconds,
            stage_iters,
            trace_out,
            result_out,
        } => {
            let mat = io_ctx(&format!("reading {}", input.display()), read_matrix(&input))?;
            let x = to_dmatrix(&mat);
            let initial_lambda = if continuation { lambda0 } else { lambda };
            let problem = OnmfProblem::with_params(x, r, initial_lambda, alpha2, beta1, beta2)?;
            let factors = match init {
                InitKind::Nndsvd => nndsvd_init(problem.data(), r)?,
                InitKind::Random => random_init(mat.rows, mat.cols, r, seed),
            };
            let x0 = problem.point_from_factors(&factors)?;
            let cfg = onmf::solver_config(&problem, alg.mode())?
                .with_epsilon(eps)
                .with_max_iterations(max_iters)
                .with_max_seconds(max_seconds);

            let started = Instant::now();
            let result: SolveResult<f64> = if continuation {
                let (stage, total) = match (stage_seconds, stage_iters) {
                    (Some(s), None) => {
                        let total = max_seconds.ok_or_else(|| {
                            CoreError::Config(
                                "--stage-seconds needs --max-seconds as the total budget".into(),
                            )
                        })?;
                        (StageBudget::Seconds(s), StageBudget::Seconds(total))
                    }
                    (None, Some(s)) => (
                        StageBudget::Iterations(s),
                        StageBudget::Iterations(max_iters),
                    ),
                    (None, None) => {
                        return Err(CoreError::Config(
                            "--continuation needs --stage-seconds or --stage-iters".into(),
                        )
                        .into())
                    }
                    (Some(_), Some(_)) => {
                        return Err(CoreError::Config(
                            "choose one of --stage-seconds or --stage-iters".into(),
                        )
                        .into())
                    }
                };
                let base = problem.clone();
                continuation_run(
                    |lam| onmf::composite_problem(base.with_lambda(lam)?),
                    &x0,
                    &cfg,
                    lambda0,
                    factor,
                    stage,
                    total,
                )?
            } else {
                let composite = onmf::composite_problem(problem.clone())?;
                solve(&composite, &x0, &cfg)?
            };
            let wall = started.elapsed().as_secs_f64();

            let lambda_final = result
                .stages
                .last()
                .map(|s| s.lambda)
                .unwrap_or(initial_lambda);
            let final_problem = problem.with_lambda(lambda_final)?;
            let final_factors = final_problem.factors_from_point(&result.final_point);
            let met = metrics(&final_problem, &final_factors)?;

            if let Some(path) = &trace_out {
                let mut buf = Vec::new();
                io_ctx("formatting trace", write_trace_csv(&result, &mut buf))?;
                io_ctx("writing trace", fs::write(path, buf))?;
            }
            let mut summary = String::new();
            summary.push_str(&format!("algorithm={}\n", alg.name()));
            summary.push_str(&format!("lambda_final={}\n", fmt17(lambda_final)));
            summary.push_str(&format!("iterations={}\n", result.iterations()));
            summary.push_str(&format!("phi_final={}\n", fmt17(result.final_phi())));
            summary.push_str(&format!("f_error={}\n", fmt17(met.fidelity_error)));
            summary.push_str(&format!("o_error={}\n", fmt17(met.orthogonality_error)));
            summary.push_str(&format!("oracle_calls={}\n", result.oracle_calls()));
            summary.push_str(&format!("wall_time_s={}\n", fmt17(wall)));
            if let Some(path) = &result_out {
                io_ctx("writing result summary", fs::write(path, &summary))?;
            }
            print!("{summary}");
            Ok(0)
        }
        Command::Check {
            input,
            synthetic,
            r,
            lambda,
            alpha2,
            beta1,
            beta2,
            samples,
            seed,
            noise,
            l1_override,
            l2_override,
        } => {
            let (x, rank) = match input {
                Some(path) => {
                    let mat = io_ctx(&format!("reading {}", path.display()), read_matrix(&path))?;
                    let rank = r.ok_or_else(|| {
                        CoreError::Config("--r is required with an input file".into())
                    })?;
                    (to_dmatrix(&mat), rank)
                }
                None => {
                    let Dims(m, n, sr) = synthetic;
                    let (x, _) = synthetic_onmf::<f64>(m, n, sr, noise, seed)?;
                    (x, r.unwrap_or(sr))
                }
            };
            let problem = OnmfProblem::with_params(x, rank, lambda, alpha2, beta1, beta2)?;
            let (l1, l2) = problem.smoothness_constants();
            println!("L1={l1}");
            println!("L2={l2}");
            let checked = [l1_override.unwrap_or(l1), l2_override.unwrap_or(l2)];
            if checked != [l1, l2] {
                println!(
                    "checking overridden constants L1={} L2={}",
                    checked[0], checked[1]
                );
            }
            let composite = onmf::composite_problem(problem)?;
            let report = composite.verify_relative_smoothness_at(&checked, samples, seed)?;
            for (i, v) in report.max_violation.iter().enumerate() {
                println!("violation_{}={:.3e}", i + 1, v);
            }
            let worst = report.worst();
            let ok = worst <= 1e-8;
            println!("max_violation={worst:.3e}");
            println!("certified={ok}");
            Ok(if ok { 0 } else { 3 })
        }
    }
}
