//! The `nmlab` command-line driver.
//!
//! ```text
//! nmlab simulate --model dephasing-sin --t-max 6.2832 --dt 0.001 --output traj.csv
//! nmlab measure  --model eternal-nm --t 1.0
//! nmlab verify   --suite theorem1 --seed 7 --output report.json
//! ```
//!
//! `--model` takes a catalog name or a path to a JSON model file (see
//! [`crate::models`]). Exit codes: 0 success, 1 verification failure,
//! 2 configuration or parse error, 3 numerical failure or non-convergence.
//! `NMLAB_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{accumulate, measure_instant, rhp_integral, Instant, MeasurePoint, Mode, OptimizerConfig, OptimizerReport};
use crate::models::{by_name, from_spec, random_kossakowski, ModelSpec};
use crate::verify::{self, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// CSV header written by `simulate`.
pub const CSV_HEADER: &str = "t,g,g_finite_eps,d_T,r_inc_rate,N_T,T_norm,R_cum";

#[derive(Parser, Debug)]
#[command(name = "nmlab", version, about = "Non-Markovianity measures for time-dependent Lindblad generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep a time grid and write one CSV row per grid point.
    Simulate(SimulateArgs),
    /// Evaluate every measure at a single time and print JSON.
    Measure(MeasureArgs),
    /// Run a randomized property suite and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OptimizerArgs {
    /// Subgradient iteration cap.
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Minimum improvement over the patience window.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Initial subgradient step (default 0.1·‖K‖₁).
    #[arg(long)]
    pub step0: Option<f64>,
    /// Cross-check every solve against the brute-force oracle.
    #[arg(long)]
    pub oracle: bool,
    /// Include Hamiltonian parts in the free cone.
    #[arg(long)]
    pub allow_hamiltonian: bool,
    /// Skip the ADMM refinement stage.
    #[arg(long)]
    pub no_polish: bool,
}

impl OptimizerArgs {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iter: self.max_iter,
            tol: self.tol,
            step0: self.step0,
            oracle: self.oracle,
            allow_hamiltonian: self.allow_hamiltonian,
            polish: !self.no_polish,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Catalog name or path to a JSON model file.
    #[arg(long)]
    pub model: String,
    /// Finite increment ε.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    /// Seed for `random-kossakowski`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub t_max: f64,
    /// Grid spacing.
    #[arg(long)]
    pub dt: f64,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Clone)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub t: f64,
    /// Grid spacing for the running integral `N_T`.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Report file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

/// Catalog lookup, falling back to a model file.
pub fn load_model(name: &str, seed: Option<u64>) -> Result<ModelSpec> {
    if name == "random-kossakowski" {
        if let Some(s) = seed {
            return Ok(random_kossakowski(s));
        }
    }
    if let Some(m) = by_name(name) {
        return Ok(m);
    }
    let path = std::path::Path::new(name);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!("`{name}` is neither a catalog model nor a file")));
    }
    from_spec(&std::fs::read_to_string(path)?)
}

/// `0, dt, 2dt, …` up to `t_max`, with `t_max` appended when it falls
/// between grid points.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("t-max must be positive, got {t_max}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if t_max - grid[n] > 1e-9 * dt {
        grid.push(t_max);
    }
    Ok(grid)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")))
    }
}

/// Run `f` on a pool capped by `NMLAB_THREADS`.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var("NMLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Every grid point of a trajectory, in grid order.
pub fn trajectory(model: &ModelSpec, grid: &[f64], eps: f64, mode: Mode, cfg: &OptimizerConfig) -> Result<(Vec<MeasurePoint>, Vec<OptimizerReport>)> {
    check_eps(eps)?;
    let instants: Vec<Instant> = with_pool(|| {
        grid.par_iter().map(|&t| measure_instant(&model.generator, t, eps, mode, cfg)).collect::<Result<_>>()
    })?;
    let reports = instants.iter().map(|p| p.report.clone()).collect();
    Ok((accumulate(&instants)?, reports))
}

/// Shortest representation that parses back to the same `f64`.
fn csv_value(v: f64) -> String {
    format!("{v:?}")
}

/// Render a trajectory as CSV.
pub fn to_csv(points: &[MeasurePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let finite = p.g_finite_eps.map(csv_value).unwrap_or_default();
        let row = [csv_value(p.t), csv_value(p.g), finite, csv_value(p.d_t), csv_value(p.r_inc_rate), csv_value(p.n_t), csv_value(p.t_norm), csv_value(p.r_cum)];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct MeasureOutput<'a> {
    model: &'a str,
    mode: Mode,
    eps: f64,
    #[serde(flatten)]
    point: MeasurePoint,
    report: OptimizerReport,
}

fn emit(output: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let grid = time_grid(args.t_max, args.dt)?;
    check_eps(args.model.eps)?;
    let model = load_model(&args.model.model, args.model.seed)?;
    let (points, reports) = trajectory(&model, &grid, args.model.eps, args.model.mode, &args.optimizer.config())?;
    emit(&args.output, &to_csv(&points), stdout)?;
    Ok(if reports.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_NUMERICAL })
}

fn measure(args: &MeasureArgs, stdout: &mut dyn Write) -> Result<i32> {
    if !(args.t >= 0.0) || !args.t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be non-negative, got {}", args.t)));
    }
    check_eps(args.model.eps)?;
    let model = load_model(&args.model.model, args.model.seed)?;
    let cfg = args.optimizer.config();
    let here = measure_instant(&model.generator, args.t, args.model.eps, args.model.mode, &cfg)?;
    // The running integral only needs g, never the optimizer.
    let rate_only = OptimizerConfig { max_iter: 0, polish: false, oracle: false, ..cfg.clone() };
    let grid = if args.t > 0.0 { time_grid(args.t, args.dt)? } else { vec![0.0] };
    let rates: Vec<(f64, f64)> = with_pool(|| {
        grid.par_iter()
            .map(|&t| measure_instant(&model.generator, t, args.model.eps, args.model.mode, &rate_only).map(|p| (t, p.g)))
            .collect::<Result<_>>()
    })?;
    let n_t = *rhp_integral(&rates)?.last().expect("grid is non-empty");
    let point = MeasurePoint {
        t: here.t,
        g: here.g,
        g_finite_eps: here.g_finite_eps,
        d_t: here.d_t,
        r_inc_rate: here.r_inc_rate,
        n_t,
        t_norm: crate::measures::normalized_measure(n_t),
        r_cum: crate::measures::robustness_cumulative(n_t),
    };
    let converged = here.report.converged;
    let out = MeasureOutput { model: &model.name, mode: args.model.mode, eps: args.model.eps, point, report: here.report };
    let mut text = serde_json::to_string_pretty(&out).expect("measure output serializes");
    text.push('\n');
    stdout.write_all(text.as_bytes())?;
    Ok(if converged { EXIT_OK } else { EXIT_NUMERICAL })
}

fn verify_cmd(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = args.optimizer.config();
    let report = with_pool(|| verify::run(args.suite, args.seed, &cfg));
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(&args.output, &text, stdout)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Exit code for an error that escaped a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::InvalidArgument(_)
        | Error::Io(_)
        | Error::DimensionMismatch(_)
        | Error::StepTooLarge { .. }
        | Error::UnsortedGrid { .. }
        | Error::NotMarkovian { .. }
        | Error::NonHermitian { .. } => EXIT_CONFIG,
        Error::NonFinite | Error::NonTraceless { .. } | Error::NegativeRate { .. } => EXIT_NUMERICAL,
    }
}

/// Parse `args` and run the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Measure(a) => measure(a, stdout),
        Command::Verify(a) => verify_cmd(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("nmlab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = time_grid(1.0, 0.25).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = time_grid(1.1, 0.5).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.1]);
        assert!(time_grid(0.0, 0.1).is_err());
        assert!(time_grid(1.0, -0.1).is_err());
    }

    #[test]
    fn bad_configs_exit_with_two() {
        assert_eq!(call(&["simulate", "--model", "dephasing-const", "--t-max", "1", "--dt", "0"]).0, EXIT_CONFIG);
        assert_eq!(call(&["simulate", "--model", "no-such-model", "--t-max", "1", "--dt", "0.1"]).0, EXIT_CONFIG);
        assert_eq!(call(&["measure", "--model", "eternal-nm", "--t", "1", "--eps", "-1"]).0, EXIT_CONFIG);
        assert_eq!(call(&["frobnicate"]).0, EXIT_CONFIG);
    }

    #[test]
    fn simulate_writes_header_and_rows() {
        let (code, out, _) = call(&["simulate", "--model", "dephasing-const", "--t-max", "0.1", "--dt", "0.05"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0,0.0,"), "{}", lines[1]);
    }

    #[test]
    fn measure_prints_json() {
        let (code, out, _) = call(&["measure", "--model", "eternal-nm", "--t", "1", "--mode", "exact-limit"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["g"].as_f64().unwrap() - 1f64.tanh()).abs() < 1e-6);
        assert!(v["report"]["converged"].as_bool().unwrap());
        assert!(v["g_finite_eps"].is_null());
        assert!((v["N_T"].as_f64().unwrap() - 1f64.cosh().ln()).abs() < 1e-3);
    }
}
