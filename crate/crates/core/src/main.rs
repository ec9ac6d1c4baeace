use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vk_morley::control::SolverConfig;
use vk_morley::harness::{
    case_lshape, case_square, emit_estimator_dump, emit_meshes, emit_report, run_adaptive, run_uniform, Column, RunConfig, RunReport,
};

#[derive(Parser)]
#[command(name = "vk-morley", version, about = "Morley FEM optimal control of the von Kármán plate equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a manufactured example and write the per-level report.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Square,
    Lshape,
}

#[derive(Clone, Copy, ValueEnum)]
enum Refine {
    Uniform,
    Adaptive,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    example: Example,
    #[arg(long, value_enum, default_value = "uniform")]
    refine: Refine,
    /// Number of uniform levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Number of adaptive solves.
    #[arg(long, default_value_t = 16)]
    max_iter: usize,
    /// Dörfler bulk parameter.
    #[arg(long, default_value_t = 0.2)]
    theta: f64,
    /// Overrides the example's regularisation parameter.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    newton_tol: f64,
    #[arg(long, default_value_t = 10)]
    quad_error_degree: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dump_estimators: Option<PathBuf>,
    /// Writes `<prefix>_<level>.mesh` for every level.
    #[arg(long)]
    mesh_out: Option<String>,
}

fn run(args: &RunArgs) -> vk_morley::Result<RunReport> {
    let mut case = match args.example {
        Example::Square => case_square(),
        Example::Lshape => case_lshape(),
    };
    if let Some(alpha) = args.alpha {
        case.alpha = alpha;
    }
    let config = RunConfig {
        solver: SolverConfig { newton_tol: args.newton_tol, ..SolverConfig::default() },
        error_degree: args.quad_error_degree,
        keep_levels: args.dump_estimators.is_some() || args.mesh_out.is_some(),
        ..RunConfig::default()
    };
    let report = match args.refine {
        Refine::Uniform => run_uniform(&case, args.levels, &config)?,
        Refine::Adaptive => run_adaptive(&case, args.max_iter, args.theta, &config)?,
    };
    emit_report(&report, &args.out)?;
    if let Some(path) = &args.dump_estimators {
        emit_estimator_dump(&report, path)?;
    }
    if let Some(prefix) = &args.mesh_out {
        emit_meshes(&report, prefix)?;
    }
    Ok(report)
}

fn summarize(report: &RunReport) {
    let orders = report.orders(Column::Total);
    println!("{:>5} {:>8} {:>8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>7}", "level", "ndof", "h", "state", "adjoint", "control", "total", "eta", "order");
    for (r, o) in report.rows.iter().zip(orders) {
        println!(
            "{:>5} {:>8} {:>8.4} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>7}",
            r.level,
            r.ndof,
            r.h_max,
            r.err_state,
            r.err_adjoint,
            r.err_control,
            r.total_error,
            r.eta,
            o.map_or_else(|| "--".into(), |v| format!("{v:.2}"))
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(report) => {
                summarize(&report);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
