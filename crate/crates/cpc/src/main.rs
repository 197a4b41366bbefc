use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cpc::bench::{run_benchmark, BenchConfig, OutputFormat};
use cpc::error::HarnessError;
use cpc::generate::{random_orthonormal, replication_rng};
use cpc::io::{load_instance, load_instance_unchecked, save_report};
use cpc_core::oracle::{rotation_grid_min, single_group_analytic_min, DEFAULT_GRID};
use cpc_core::{OrthonormalMatrix, SolverConfig, SolverKind};

const EXIT_STALL: u8 = 3;

#[derive(Parser)]
#[command(name = "cpc", version, about = "Common principal components solvers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every requested solver on seeded random instances.
    Bench {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        groups: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Comma-separated solver ids (als, flury, mm1, mm2, mm3, mm4).
        #[arg(long, value_delimiter = ',', default_value = "als,flury,mm1,mm2,mm3,mm4")]
        solvers: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Solve one problem file.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solver: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = Start::Identity)]
        d0: Start,
        /// Seed for `--d0 random`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a problem file and list every violation.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    #[command(hide = true)]
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Identity,
    Random,
}

fn threads_from_env() -> Result<usize, HarnessError> {
    match std::env::var("CPC_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(HarnessError::Config(format!("CPC_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

fn parse_solver(s: &str) -> Result<SolverKind, HarnessError> {
    Ok(s.trim().parse::<SolverKind>()?)
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Bench { p, groups, reps, solvers, seed, tol, max_iter, out, format } => {
            let solvers = solvers.iter().map(|s| parse_solver(s)).collect::<Result<Vec<_>, _>>()?;
            let mut cfg = BenchConfig::new(p, groups, reps, solvers, seed);
            cfg.tol = tol;
            cfg.max_iter = max_iter;
            cfg.output_path = Some(out);
            cfg.format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            cfg.threads = threads_from_env()?;
            let (_, table) = run_benchmark(&cfg)?;
            println!("{:<6} {:>12} {:>12} {:>14}", "solver", "mean_time", "mean_iter", "mean_%diff");
            for r in &table.rows {
                println!(
                    "{:<6} {:>12.6} {:>12.1} {:>14.6}",
                    r.solver.id(),
                    r.mean_time,
                    r.mean_iterations,
                    r.mean_pct_diff
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { input, solver, tol, max_iter, d0, seed, out } => {
            let solver = parse_solver(&solver)?;
            let inst = load_instance(&input)?;
            let d0 = match d0 {
                Start::Identity => OrthonormalMatrix::identity(inst.dim()),
                Start::Random => random_orthonormal(inst.dim(), &mut replication_rng(seed, 0)),
            };
            let cfg = SolverConfig::with_tol(tol, max_iter);
            let report = solver.solve(&inst, &d0, &cfg)?;
            save_report(&report, &out)?;
            println!(
                "{}: objective {:.16e} after {} iterations (converged: {})",
                solver, report.objective(), report.iterations, report.converged
            );
            if report.stalled {
                eprintln!("error: line search stalled");
                return Ok(ExitCode::from(EXIT_STALL));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { input } => {
            let inst = load_instance_unchecked(&input)?;
            match inst.validate() {
                Ok(()) => {
                    println!("ok: p = {}, G = {}", inst.dim(), inst.groups());
                    Ok(ExitCode::SUCCESS)
                }
                Err(violations) => {
                    for v in &violations {
                        println!("{v}");
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Oracle { input, grid } => {
            let inst = load_instance(&input)?;
            if inst.groups() == 1 {
                let (min, _) = single_group_analytic_min(&inst.scatter()[0], &inst.weights()[0])?;
                println!("analytic single-group minimum: {min:.16e}");
            }
            if inst.dim() == 2 {
                let g = rotation_grid_min(&inst, grid)?;
                println!(
                    "grid minimum: {:.16e} at theta {:.8} (swapped: {}, curvature bound {:.3e})",
                    g.best_objective, g.best_angle, g.swapped, g.curvature_bound
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
