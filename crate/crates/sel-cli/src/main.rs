//! `sel`: batch driver for the singular elliptic lab.
//!
//! Every command reads an optional TOML config (`--config`), applies the
//! command-line flags on top, and writes CSV/JSON artifacts to the output
//! directory: `--output-dir`, else `[output] dir`, else `$SEL_OUTPUT_DIR`,
//! else `./sel-out`. Errors go to stderr as one JSON object.
//!
//! Exit codes: 0 success, 1 IO, 2 config, 3 solver failure (files renamed
//! `*.partial`), 4 regime without solutions or outside the solvers' reach.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sel_core::classifier::{ExponentQuad, SweepRange};
use sel_core::geometry::Grading;
use sel_core::scalar_solver::WeightForm;

use config::{Command, RateTarget, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "sel", version, about = "Singular elliptic systems: classification, solvers and rate fits")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (falls back to SEL_OUTPUT_DIR).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for sweeps and acceptance runs; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regime report for one exponent quad.
    Classify(QuadArgs),
    /// Classification table over a grid of quads.
    Sweep(SweepArgs),
    /// Principal eigenpair of the operator.
    Eigen(GridArgs),
    /// Barrier ODE profile and its properties.
    Barrier(BarrierArgs),
    /// Scalar problem F(u) = k(delta) u^-p.
    SolveScalar(ScalarArgs),
    /// Coupled system by Picard iteration.
    SolveSystem(SystemArgs),
    /// Boundary rate fits against the predicted rates.
    Rates(RatesArgs),
    /// The acceptance suite.
    Acceptance(AcceptanceArgs),
    /// Runs the command named in the config file.
    Run,
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    parse_list::<4>(s)
}

fn parse_range(s: &str) -> Result<SweepRange, String> {
    let [lo, hi, step] = parse_list::<3>(s)?;
    Ok(SweepRange { lo, hi, step })
}

#[derive(Args, Default)]
struct QuadArgs {
    /// Exponents p,q,r,s.
    #[arg(long, value_parser = parse_quad)]
    quad: Option<[f64; 4]>,
}

#[derive(Args, Default)]
struct GridArgs {
    /// Grid nodes per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Boundary grading strength; 0 gives a uniform grid.
    #[arg(long)]
    grading: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// lo,hi,step for p.
    #[arg(long, value_parser = parse_range)]
    p: Option<SweepRange>,
    #[arg(long, value_parser = parse_range)]
    q: Option<SweepRange>,
    #[arg(long, value_parser = parse_range)]
    r: Option<SweepRange>,
    #[arg(long, value_parser = parse_range)]
    s: Option<SweepRange>,
}

#[derive(Args)]
struct BarrierArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Right end of the ODE interval.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Default)]
struct WeightArgs {
    /// Exponent of u^-p.
    #[arg(long)]
    p: Option<f64>,
    /// Weight exponent: k = delta^-q_w, times log^-a_w(A/delta) when --a-w is set.
    #[arg(long)]
    q_w: Option<f64>,
    #[arg(long)]
    a_w: Option<f64>,
    /// Log scale A; required with --a-w, must exceed the domain diameter.
    #[arg(long)]
    scale_a: Option<f64>,
}

#[derive(Args, Default)]
struct SolverArgs {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct ScalarArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    weight: WeightArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SystemArgs {
    #[command(flatten)]
    quad: QuadArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Project every Picard iterate onto the envelopes.
    #[arg(long)]
    clamp: bool,
    /// Also run the two-start uniqueness probe.
    #[arg(long)]
    uniqueness: bool,
}

#[derive(Args)]
struct RatesArgs {
    /// Fit the scalar solution or both system components.
    #[arg(long, value_parser = ["scalar", "system"])]
    target: Option<String>,
    #[command(flatten)]
    quad: QuadArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    weight: WeightArgs,
}

#[derive(Args)]
struct AcceptanceArgs {
    /// Criterion ids to run, comma separated; default all.
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

impl QuadArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some([p, q, r, s]) = self.quad {
            cfg.quad = Some(ExponentQuad::new(p, q, r, s).map_err(|e| CliError::config(e.to_string()))?);
        }
        Ok(())
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(n) = self.n {
            cfg.grid.n = n;
        }
        if let Some(k) = self.grading {
            cfg.grid.grading = if k == 0.0 { Grading::Uniform } else { Grading::BoundaryGraded { strength: k } };
        }
    }
}

impl WeightArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.scalar;
        if let Some(p) = self.p {
            s.p = p;
        }
        if let Some(q) = self.q_w {
            s.weight.q_w = q;
        }
        if let Some(a) = self.a_w {
            s.weight.a_w = a;
            if s.weight.form == WeightForm::Power {
                s.weight.form = WeightForm::PowerLog;
            }
        }
        if let Some(a) = self.scale_a {
            s.weight.scale_a = a;
        }
    }
}

impl SolverArgs {
    fn apply_scalar(&self, cfg: &mut RunConfig) {
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        if let Some(m) = self.max_iter {
            cfg.solver.max_iter = m;
        }
    }

    fn apply_system(&self, cfg: &mut RunConfig) {
        if let Some(t) = self.tol {
            cfg.system.tol = t;
        }
        if let Some(m) = self.max_iter {
            cfg.system.max_iter = m;
        }
    }
}

/// Merges the flags into the file config and picks the command.
fn resolve(cli: &Cli) -> Result<(Command, RunConfig), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.output_dir {
        cfg.output.dir = Some(d.clone());
    }
    let cmd = match &cli.command {
        Cmd::Classify(a) => {
            a.apply(&mut cfg)?;
            Command::Classify
        }
        Cmd::Sweep(a) => {
            let s = &mut cfg.sweep;
            for (flag, slot) in [(a.p, &mut s.p), (a.q, &mut s.q), (a.r, &mut s.r), (a.s, &mut s.s)] {
                if let Some(v) = flag {
                    *slot = v;
                }
            }
            Command::Sweep
        }
        Cmd::Eigen(a) => {
            a.apply(&mut cfg);
            Command::Eigen
        }
        Cmd::Barrier(a) => {
            let b = &mut cfg.barrier;
            b.alpha = a.alpha.unwrap_or(b.alpha);
            b.beta = a.beta.unwrap_or(b.beta);
            b.b = a.b.unwrap_or(b.b);
            b.samples = a.samples.unwrap_or(b.samples);
            Command::Barrier
        }
        Cmd::SolveScalar(a) => {
            a.grid.apply(&mut cfg);
            a.weight.apply(&mut cfg);
            a.solver.apply_scalar(&mut cfg);
            Command::SolveScalar
        }
        Cmd::SolveSystem(a) => {
            a.quad.apply(&mut cfg)?;
            a.grid.apply(&mut cfg);
            a.solver.apply_system(&mut cfg);
            cfg.system.clamp |= a.clamp;
            cfg.system.uniqueness |= a.uniqueness;
            Command::SolveSystem
        }
        Cmd::Rates(a) => {
            if let Some(t) = &a.target {
                cfg.rates.target = if t == "system" { RateTarget::System } else { RateTarget::Scalar };
            }
            a.quad.apply(&mut cfg)?;
            a.grid.apply(&mut cfg);
            a.weight.apply(&mut cfg);
            Command::Rates
        }
        Cmd::Acceptance(a) => {
            if !a.only.is_empty() {
                cfg.acceptance.only = a.only.clone();
            }
            Command::Acceptance
        }
        Cmd::Run => cfg.command.ok_or_else(|| CliError::config("`sel run` needs `command = \"...\"` in the config file"))?,
    };
    cfg.command = Some(cmd);
    Ok((cmd, cfg))
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let (cmd, cfg) = resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {} worker threads: {e}", cli.jobs)))?;
    pool.install(|| commands::run(cmd, &cfg)).map(|o| o.stdout)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim_end().to_string());
            report_error(&err);
            return ExitCode::from(err.exit_code());
        }
    };
    match execute(&cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            report_error(&err);
            ExitCode::from(err.exit_code())
        }
    }
}

fn report_error(err: &CliError) {
    match serde_json::to_string(&err.payload()) {
        Ok(s) => eprintln!("{s}"),
        Err(_) => eprintln!("{{\"error\":\"io\",\"message\":{:?}}}", err.to_string()),
    }
}
