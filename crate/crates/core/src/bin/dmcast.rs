use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dmcast::experiment::{self, ExperimentConfig, ExperimentError, ExperimentResult};

#[derive(Parser)]
#[command(
    name = "dmcast",
    version,
    about = "Secure multicast directional-modulation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER versus probe direction.
    BerAngle(Common),
    /// Secrecy sum-rate versus SNR.
    SsrSnr(Common),
    /// BER versus probe direction under direction-measurement errors.
    RobustBer(Common),
    /// FLOP counts of the precoder designs.
    Flops(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config(common: &Common) -> ExperimentResult<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Config {
                path: "<file>".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.threads == Some(0) {
        return Err(ExperimentError::Config {
            path: "--threads".into(),
            message: "must be >= 1".into(),
        });
    }
    Ok(config)
}

type Runner = fn(&ExperimentConfig, &mut BufWriter<File>) -> ExperimentResult<()>;

fn run(command: &Command) -> ExperimentResult<()> {
    let (common, runner): (&Common, Runner) = match command {
        Command::BerAngle(c) => (c, experiment::run_ber_angle),
        Command::SsrSnr(c) => (c, experiment::run_ssr_snr),
        Command::RobustBer(c) => (c, experiment::run_robust_ber),
        Command::Flops(c) => (c, experiment::run_flops),
    };
    let config = load_config(common)?;
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| ExperimentError::Io(std::io::Error::other(e)))?;
    let mut out = BufWriter::new(File::create(&common.out)?);
    pool.install(|| runner(&config, &mut out))?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dmcast: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
