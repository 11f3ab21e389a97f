//! Command-line front end for the adaptive mixed-boundary Poisson solver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mixed_afem::driver::RefinementMode;
use mixed_afem::marking::MarkingStrategy;
use mixed_afem::problems::ProblemName;
use mixed_afem::ProjectionKind;

#[derive(Parser, Debug)]
#[command(
    name = "mixed-afem",
    version,
    about = "Adaptive P1 FEM for Poisson with mixed Dirichlet-Neumann data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one adaptive or uniform study and write its convergence CSV.
    Run(RunArgs),
    /// Run adaptive studies for several θ plus a uniform study and print fitted rates.
    Compare(CompareArgs),
    /// Load a mesh file and report invariant violations.
    VerifyMesh(VerifyArgs),
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Benchmark problem: zshape2d | linear-patch [default: zshape2d]
    #[arg(long)]
    problem: Option<ProblemName>,

    /// Dirichlet data discretization: l2 | scott-zhang | nodal [default: l2]
    #[arg(long)]
    projection: Option<ProjectionKind>,

    /// Marking rule: doerfler-modified | doerfler-simple [default: doerfler-modified]
    #[arg(long)]
    marking: Option<MarkingStrategy>,

    /// Stop before solving on a mesh with more elements [default: 20000]
    #[arg(long, value_name = "N")]
    max_elements: Option<usize>,

    /// File of `key = value` lines; command-line flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    study: StudyArgs,

    /// Bulk parameter for element marking [default: 0.25]
    #[arg(long)]
    theta1: Option<f64>,

    /// Bulk parameter for Dirichlet-facet marking [default: 0.25]
    #[arg(long)]
    theta2: Option<f64>,

    /// Switch between the two marking branches [default: 0.25]
    #[arg(long)]
    vartheta: Option<f64>,

    /// Refinement mode: adaptive | uniform [default: adaptive]
    #[arg(long)]
    mode: Option<RefinementMode>,

    /// CSV output path [default: <problem>_<projection>_<mode>.csv]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Write the final mesh in the mesh text format
    #[arg(long, value_name = "PATH")]
    dump_mesh: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    study: StudyArgs,

    /// Comma-separated θ values, each used for θ₁ = θ₂ = ϑ [default: 0.25,0.125,0.0625]
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    thetas: Option<Vec<f64>>,

    /// Directory for the CSV files [default: .]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Mesh file in the text format written by `--dump-mesh`
    mesh: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Compare(args) => commands::compare(args),
        Command::VerifyMesh(args) => commands::verify_mesh(&args.mesh),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let code = failure.exit_code();
            let (Failure::Usage(e) | Failure::Runtime(e)) = failure;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
