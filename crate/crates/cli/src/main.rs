//! `cochceps` command-line driver.

mod commands;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use cochceps::RunConfig;

use commands::Split;
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "cochceps", version, about = "Cochlear cepstrogram extraction, augmentation and SSL evaluation")]
struct Cli {
    /// Config file of `key = value` lines (default: $COCHCEPS_CONFIG).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (overrides the `seed` key).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Manifest of CCGRAM files.
    #[arg(long = "in", value_name = "MANIFEST")]
    input: PathBuf,
    /// Fold assignment from `folds`.
    #[arg(long)]
    folds: Option<PathBuf>,
    /// 1-based rotation within `--folds`.
    #[arg(long, default_value_t = 1)]
    rotation: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resample, remove silence and cut recordings into 3 s WAV segments.
    Preprocess {
        #[arg(long = "in", value_name = "MANIFEST")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Write one .ccg file per segment of every manifest entry.
    Extract {
        #[arg(long = "in", value_name = "MANIFEST")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Render masked view pairs of one CCGRAM as PGM images.
    AugmentPreview {
        #[arg(long = "in", value_name = "CCG")]
        input: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "preview")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Contrastive pre-training on the pretrain speakers.
    Pretrain {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_name = "CKP")]
        out: PathBuf,
    },
    /// Linear probe on frozen encoder features (or flattened CCGRAMs without --model).
    Probe {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_name = "CKP")]
        model: Option<PathBuf>,
        /// Held-out manifest when no folds are given.
        #[arg(long, value_name = "MANIFEST")]
        test: Option<PathBuf>,
        #[arg(long, value_name = "CKP")]
        out: PathBuf,
    },
    /// Jointly train encoder and a non-linear head.
    Finetune {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_name = "CKP")]
        model: PathBuf,
        #[arg(long, value_name = "MANIFEST")]
        test: Option<PathBuf>,
        #[arg(long, value_name = "CKP")]
        out: PathBuf,
    },
    /// Evaluate a probe or fine-tuned checkpoint.
    Eval {
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, value_name = "CKP")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Speaker-independent fold rotation for a manifest.
    Folds {
        #[arg(long = "in", value_name = "MANIFEST")]
        input: PathBuf,
        #[arg(long, value_name = "TSV")]
        out: PathBuf,
        /// Whitespace-separated speaker pairs kept in the same role.
        #[arg(long, value_name = "FILE")]
        partners: Option<PathBuf>,
    },
    /// Render a CCGRAM as a binary PGM.
    Plot {
        #[arg(long = "in", value_name = "CCG")]
        input: PathBuf,
        #[arg(long, value_name = "PGM")]
        out: PathBuf,
        /// Draw one random mask and show it in mid-gray.
        #[arg(long)]
        overlay: bool,
    },
}

fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref()).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    cfg.apply_overrides(&cli.overrides).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn split<'a>(args: &'a SplitArgs, test: Option<&'a PathBuf>) -> Split<'a> {
    Split {
        manifest: &args.input,
        folds: args.folds.as_deref(),
        rotation: args.rotation,
        test: test.map(PathBuf::as_path),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    cfg.log_resolved();
    match &cli.command {
        Command::Preprocess { input, out } => commands::preprocess(&cfg, input, out),
        Command::Extract { input, out } => commands::extract(&cfg, input, out),
        Command::AugmentPreview { input, out, count } => commands::augment_preview(&cfg, input, out, *count),
        Command::Pretrain { split: s, out } => commands::pretrain(&cfg, &split(s, None), out),
        Command::Probe {
            split: s,
            model,
            test,
            out,
        } => commands::probe(&cfg, &split(s, test.as_ref()), model.as_deref(), out),
        Command::Finetune {
            split: s,
            model,
            test,
            out,
        } => commands::finetune_cmd(&cfg, &split(s, test.as_ref()), model, out),
        Command::Eval { split: s, model, report } => commands::eval(&cfg, &split(s, None), model, report.as_deref()),
        Command::Folds { input, out, partners } => commands::folds(&cfg, input, out, partners.as_deref()),
        Command::Plot { input, out, overlay } => commands::plot(&cfg, input, out, *overlay),
    }
}

fn synopsis() -> String {
    Cli::command().render_help().to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{}", synopsis());
            return ExitCode::from(1);
        }
    };
    let level = if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("{}", synopsis());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
