use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hydrostat_core::app::{check_noise_path, simulate_path, with_threads, ExitStatus, SimulateOptions};
use hydrostat_core::io::write_json;
use hydrostat_core::verify::{parse_grids, run_suite, Suite};

/// Stochastic primitive equations on a periodic layer.
#[derive(Parser, Debug)]
#[command(name = "hydrostat", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HYDROSTAT_THREADS")]
    threads: Option<usize>,

    /// Run even if the noise fails the parabolicity condition.
    #[arg(long, global = true)]
    allow_nonparabolic: bool,

    /// Override the ensemble base seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the ensemble described by a config file.
    Simulate { config: PathBuf },
    /// Run a verification suite and print a JSON report.
    Verify {
        /// projection | kadlec | cancellation | strat | energy | all
        suite: String,
        /// Resolutions as NXxNYxNZ, comma separated.
        #[arg(long)]
        grids: Option<String>,
        /// Ensemble size of the stochastic suites.
        #[arg(long, default_value_t = 2000)]
        trajectories: usize,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the noise basis and print its assumption report.
    CheckNoise { config: PathBuf },
}

fn verify(suite: &str, grids: Option<&str>, n_traj: usize, report: Option<&PathBuf>) -> ExitStatus {
    let result = (|| {
        let suite: Suite = suite.parse()?;
        let grids = grids.map(parse_grids).transpose()?.unwrap_or_default();
        run_suite(suite, &grids, n_traj)
    })();
    let reports = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::Config;
        }
    };
    let mut stdout = io::stdout().lock();
    if let Err(e) = write_json(&mut stdout, &reports) {
        eprintln!("error: {e}");
        return ExitStatus::Config;
    }
    if let Some(path) = report {
        let written = std::fs::File::create(path).map_err(Into::into).and_then(|mut f| write_json(&mut f, &reports));
        if let Err(e) = written {
            eprintln!("error: {}: {e}", path.display());
            return ExitStatus::Config;
        }
    }
    let mut ok = true;
    for r in &reports {
        for c in r.failures() {
            ok = false;
            eprintln!("FAIL [{}] {c}", r.suite);
        }
    }
    if ok {
        ExitStatus::Ok
    } else {
        ExitStatus::Verify
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = SimulateOptions { allow_nonparabolic: cli.allow_nonparabolic, seed: cli.seed };
    let threads = cli.threads.filter(|&n| n > 0);
    let status = with_threads(threads, || match &cli.command {
        Command::Simulate { config } => simulate_path(config, &opts, &mut io::stdout().lock()),
        Command::Verify { suite, grids, trajectories, report } => {
            verify(suite, grids.as_deref(), *trajectories, report.as_ref())
        }
        Command::CheckNoise { config } => check_noise_path(config, &mut io::stdout().lock()),
    });
    let status = status.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitStatus::Config
    });
    let _ = io::stdout().flush();
    ExitCode::from(status.code() as u8)
}
