use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nonlin_eig::config::ExperimentConfig;
use nonlin_eig::runner::{describe, run_experiment};
use nonlin_eig::validation::{run_suite, Scale};
use nonlin_eig::Error;

/// Nonlinear eigenpairs of p-homogeneous functionals.
#[derive(Parser)]
#[command(name = "nonlin-eig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (or a previous run.json).
    Run {
        config: PathBuf,
        /// Worker threads for the grid kernels (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant and acceptance checks.
    Validate {
        #[arg(long, value_enum, default_value_t = ScaleArg::Quick)]
        scale: ScaleArg,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the resolved parameters of a config without running it.
    Describe { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Quick,
    Full,
}

fn init_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn run(config: &Path, threads: Option<usize>, out: Option<PathBuf>) -> Result<(), Error> {
    init_threads(threads)?;
    let cfg = ExperimentConfig::load(config)?;
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    let s = run_experiment(&cfg, &dir)?;
    println!(
        "{}: {} iterations, lambda = {:.12e}, residual = {:.3e}, stop = {:?}, converged = {}",
        s.solver.name(),
        s.iterations,
        s.final_lambda,
        s.final_residual,
        s.stop_reason,
        s.converged
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, threads, out } => run(&config, threads, out),
        Command::Describe { config } => ExperimentConfig::load(&config)
            .and_then(|cfg| describe(&cfg))
            .and_then(|v| Ok(println!("{}", serde_json::to_string_pretty(&v)?))),
        Command::Validate { scale, threads } => {
            if let Err(e) = init_threads(threads) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            let scale = match scale {
                ScaleArg::Quick => Scale::Quick,
                ScaleArg::Full => Scale::Full,
            };
            let checks = run_suite(scale);
            for c in &checks {
                print!("{c}");
            }
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                println!("all {} checks passed", checks.len());
                return ExitCode::SUCCESS;
            }
            println!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join("; "));
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) | Error::Expression { .. } | Error::Io(_) | Error::Instance(_) => {
                    ExitCode::from(1)
                }
                Error::Domain(_) => ExitCode::from(2),
            }
        }
    }
}
