use std::path::PathBuf;
use std::process::ExitCode;

use audiosum::cli::{self, SummarizeOutputs};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "audiosum", version, about = "Extractive audio summarization")]
struct Args {
    /// TOML pipeline config; defaults to the file named by AUDIOSUM_CONFIG
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an informativeness model on a manifest of `audio<TAB>transcript` lines
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a summary WAV, a manifest and optionally a score plot
    Summarize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Summary length as a fraction of the input; defaults to the config value
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Print start, end, predicted divergence and score of every candidate
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Split a recording into repeating background and foreground
    Separate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        background: PathBuf,
        #[arg(long)]
        foreground: PathBuf,
    },
    /// Divergence between the word distributions of two text files
    Jsd {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        segment: PathBuf,
    },
}

fn run(args: Args) -> audiosum::Result<()> {
    let cfg = cli::resolve_config(args.config.as_deref())?;
    match args.command {
        Command::Train { manifest, output } => {
            let report = cli::cmd_train(&manifest, &output, &cfg)?;
            println!("{report}");
        }
        Command::Summarize {
            model,
            input,
            ratio,
            output,
            manifest,
            plot,
        } => {
            let outputs = SummarizeOutputs {
                audio: &output,
                manifest: &manifest,
                plot: plot.as_deref(),
            };
            let report = cli::cmd_summarize(&model, &input, ratio.unwrap_or(cfg.ratio), &outputs, &cfg)?;
            println!(
                "selected {} of {} segments, {:.2} s of {:.2} s",
                report.selected().count(),
                report.k,
                report.selected_duration(),
                report.duration
            );
        }
        Command::Score { model, input } => print!("{}", cli::cmd_score(&model, &input, &cfg)?),
        Command::Separate {
            input,
            background,
            foreground,
        } => {
            cli::cmd_separate(&input, &background, &foreground, &cfg)?;
        }
        Command::Jsd { source, segment } => println!("{:?}", cli::cmd_jsd(&source, &segment)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
