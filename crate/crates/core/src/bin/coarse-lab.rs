use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coarse_lab::experiment::{self, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "coarse-lab", version, about = "Lattice topological-insulator experiments")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the configured Hamiltonian
    Spectrum(RunArgs),
    /// Chern number across a sweep of toy-model masses
    ChernSweep(RunArgs),
    /// In-gap states of the open box and their localization
    GapFill(RunArgs),
    /// Edge index estimators and the quantized edge current
    EdgeCurrent(RunArgs),
    /// Real-space Chern number and edge index over a disorder ensemble
    Disorder(RunArgs),
    /// Edge index for two partitions of the same box
    Cobordism(RunArgs),
    /// Check a config without running it
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; defaults to the config, then $COARSE_LAB_OUT, then ./coarse-lab-out
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core
    #[arg(long, value_name = "N", default_value_t = 0)]
    threads: usize,
    /// Replace the disorder seed; an ensemble of n seeds becomes K, ..., K+n-1
    #[arg(long, value_name = "K")]
    seed_override: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Check against this experiment instead of the one in the config
    #[arg(long)]
    experiment: Option<String>,
}

fn fail(err: &coarse_lab::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(experiment::error_exit_code(err) as u8)
}

fn run(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    let mut config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(k) = args.seed_override {
        config.override_seed(k);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
        eprintln!("warning: {e}");
    }
    let report = match experiment::run(&config, Some(kind)) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let dir = experiment::output_dir(args.out.as_deref(), &config);
    match experiment::write_outputs(&report, &dir) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => return fail(&e),
    }
    if let Some(failure) = &report.failure {
        eprintln!("{}: {}", failure.kind, failure.message);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn validate(args: ValidateArgs) -> ExitCode {
    let kind = match args.experiment.as_deref().map(|s| serde_json::from_value(serde_json::Value::String(s.into()))) {
        None => None,
        Some(Ok(k)) => Some(k),
        Some(Err(_)) => return fail(&coarse_lab::Error::Config(format!("unknown experiment {:?}", args.experiment.unwrap()))),
    };
    match ExperimentConfig::load(&args.config).and_then(|c| experiment::validate(&c, kind)) {
        Ok(summary) => {
            print!("{}", summary.render());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Spectrum(a) => run(ExperimentKind::Spectrum, a),
        Command::ChernSweep(a) => run(ExperimentKind::ChernSweep, a),
        Command::GapFill(a) => run(ExperimentKind::GapFill, a),
        Command::EdgeCurrent(a) => run(ExperimentKind::EdgeCurrent, a),
        Command::Disorder(a) => run(ExperimentKind::Disorder, a),
        Command::Cobordism(a) => run(ExperimentKind::Cobordism, a),
        Command::Validate(a) => validate(a),
    }
}
