//! `domainshift`: feature extraction, transform and model comparisons, training,
//! evaluation and whole-file inference for cutting-sound detection.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use domainshift::app::{self, Context, ExperimentConfig};
use domainshift::dataset::SynthSpec;

#[derive(Parser, Debug)]
#[command(name = "domainshift", version, about = "Adversarial domain adaptation for cutting-sound detection")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed for splits and training.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Rebuild outputs that already exist.
    #[arg(long, global = true)]
    force: bool,
    /// Use synthetic data: `default` or `k=v,...` over the synthetic spec fields.
    #[arg(long, global = true, value_name = "SPEC")]
    synthetic: Option<String>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract a feature cache for every manifest entry.
    Extract,
    /// Compare the five feature transforms with the probe network.
    Rq1,
    /// Run the model comparison grid.
    Rq2,
    /// Train `train.model` once and save its best checkpoint.
    Train,
    /// Evaluate a checkpoint on the test splits.
    Eval {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
    },
    /// Predict cut intervals over a whole recording.
    InferFile {
        audio: PathBuf,
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Label CSV for scoring the prediction.
        #[arg(long, value_name = "CSV")]
        labels: Option<PathBuf>,
        /// Write `frame_time,truth,prediction` rows here.
        #[arg(long, value_name = "CSV")]
        plot: Option<PathBuf>,
        /// Drop predicted intervals shorter than this many seconds.
        #[arg(long, value_name = "SECONDS")]
        min_duration: Option<f64>,
    },
    /// Summarize the result files in the output directory.
    Report,
}

fn build_config(cli: &Cli) -> domainshift::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::read(path)?.config,
        None => {
            log::info!("no --config given; using built-in defaults");
            ExperimentConfig::default()
        }
    };
    for kv in &cli.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(spec) = &cli.synthetic {
        cfg.data.synthetic = Some(app::parse_synth_spec(spec, &SynthSpec::default())?);
    }
    if let Command::InferFile { min_duration: Some(d), .. } = &cli.command {
        cfg.infer.min_duration_s = *d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> domainshift::Result<()> {
    let cfg = build_config(cli)?;
    let stdout = std::io::stdout();
    let mut console = stdout.lock();
    let mut ctx = Context::new(cfg, &mut console);
    ctx.force = cli.force;
    match &cli.command {
        Command::Extract => app::cmd_extract(&mut ctx).map(drop),
        Command::Rq1 => app::cmd_rq1(&mut ctx).map(drop),
        Command::Rq2 => app::cmd_rq2(&mut ctx).map(drop),
        Command::Train => app::cmd_train(&mut ctx).map(drop),
        Command::Eval { checkpoint } => app::cmd_eval(&mut ctx, checkpoint).map(drop),
        Command::InferFile { audio, checkpoint, labels, plot, .. } => {
            app::cmd_infer_file(&mut ctx, audio, labels.as_deref(), checkpoint, plot.as_deref()).map(drop)
        }
        Command::Report => app::cmd_report(&mut ctx).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
