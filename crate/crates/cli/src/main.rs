use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fuseclust_cli::{
    cmd_ari, cmd_biclust, cmd_fit, cmd_path, cmd_simulate, cmd_stability, CliError, CliResult, Overrides, RunConfig,
    Status, EXIT_NOT_CONVERGED,
};

/// Supervised convex clustering.
#[derive(Parser)]
#[command(name = "fuseclust", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit at one regularization level.
    Fit,
    /// Solve a warm-started regularization path.
    Path,
    /// Choose λ by stability selection and fit there.
    Stability,
    /// Convex biclustering, optionally supervised.
    Biclust,
    /// Generate a benchmark data set.
    Simulate {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Adjusted Rand index between two label files.
    Ari { a: PathBuf, b: PathBuf },
}

fn load_config(cli: &Cli, required: bool) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None if required => return Err(CliError::config("this command needs --config")),
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
    });
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<Status> {
    match &cli.command {
        Command::Fit => cmd_fit(&load_config(cli, true)?),
        Command::Path => cmd_path(&load_config(cli, true)?),
        Command::Stability => cmd_stability(&load_config(cli, true)?),
        Command::Biclust => cmd_biclust(&load_config(cli, true)?),
        Command::Simulate {
            scenario,
            family,
            n,
            p,
            noise,
        } => {
            let cfg = load_config(cli, false)?;
            let spec = cfg.simulate.clone();
            let scenario = scenario
                .clone()
                .or_else(|| spec.as_ref().map(|s| s.scenario.clone()))
                .ok_or_else(|| CliError::config("simulate needs --scenario"))?;
            let family = family
                .clone()
                .or_else(|| spec.as_ref().map(|s| s.family.clone()))
                .unwrap_or_else(|| "gaussian".into());
            let n = n.or(spec.as_ref().and_then(|s| s.n));
            let p = p.or(spec.as_ref().and_then(|s| s.p));
            let noise = noise.or(spec.as_ref().and_then(|s| s.noise));
            cmd_simulate(&cfg, &scenario, &family, n, p, noise)
        }
        Command::Ari { a, b } => {
            let v = cmd_ari(a, b)?;
            println!("{v}");
            Ok(Status { converged: true })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FUSECLUST_LOG", "warn")).init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(Status { converged: true }) => ExitCode::SUCCESS,
        Ok(Status { converged: false }) => {
            eprintln!("fuseclust: solver did not converge; results were written anyway");
            ExitCode::from(EXIT_NOT_CONVERGED as u8)
        }
        Err(e) => {
            eprintln!("fuseclust: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
