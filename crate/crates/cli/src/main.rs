use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsweep_core::runner::{run, Command, RunOptions};

#[derive(Parser)]
#[command(
    name = "qsweep",
    version,
    about = "Double-slit flow-field and trajectory simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Analytic screen profiles and fringe contrast
    Profile(Common),
    /// Trajectory ensembles, field maps and screen histograms
    Trajectories(Common),
    /// Sideways-arrival statistics across transmission factors
    SweepA(Common),
    /// Contrast against transmission for both attenuation kinds
    DualityTable(Common),
    /// Field against reference wavefunction and continuity checks
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// overrides `trajectories.seed`
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads; all cores when omitted
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Profile(c) => (Command::Profile, c),
        Sub::Trajectories(c) => (Command::Trajectories, c),
        Sub::SweepA(c) => (Command::SweepA, c),
        Sub::DualityTable(c) => (Command::DualityTable, c),
        Sub::Verify(c) => (Command::Verify, c),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            log::error!("--threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::error!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let options = RunOptions {
        command,
        config: args.config,
        out_dir: args.out.clone(),
        seed: args.seed,
    };
    match run(&options) {
        Ok(summary) => {
            for w in &summary.manifest.warnings {
                log::warn!("{w}");
            }
            log::info!(
                "{}: wrote {} files to {} in {:.1} s",
                command.as_str(),
                summary.manifest.files.len() + 1,
                args.out.display(),
                summary.manifest.wall_time_s
            );
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                log::error!("verification failed; see verify_report.json");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
