use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dirspeech::{Estimator, Pipeline, PipelineConfig, SceneSet};
use dirspeech_core::eval::ReportFormat;

#[derive(Parser)]
#[command(name = "dirspeech", version, about = "Directional multi-talker speech: simulate, augment, beamform, localize, evaluate")]
struct Cli {
    /// Pipeline config (TOML). The built-in smoke config when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; overrides the config's `out`.
    #[arg(long, global = true, env = "DIRSPEECH_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Table,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic smoke corpus.
    Smoke,
    /// Simulate single- and multi-talker scenes.
    Simulate {
        /// Use the unseen room set.
        #[arg(long)]
        unseen: bool,
    },
    /// Contrastive direction augmentation of the source corpus.
    Augment,
    /// Design the 12-beam superdirective bank.
    DesignBeams {
        #[arg(long)]
        loading: Option<f64>,
        #[arg(long)]
        fft_size: Option<usize>,
    },
    /// Filter scenes into beams.
    Beamform {
        #[arg(long, value_enum, default_value_t = SceneSet::Scenes)]
        input: SceneSet,
    },
    /// Train the linear localizer.
    Train {
        /// Leave out the augmented set.
        #[arg(long)]
        no_cdda: bool,
    },
    /// Estimate directions and write predictions.
    Localize {
        #[arg(long, value_enum, default_value_t = Estimator::Classifier)]
        estimator: Estimator,
    },
    /// Score a prediction manifest.
    Evaluate {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Every stage in order.
    Run {
        #[arg(long, value_enum, default_value_t = Estimator::Classifier)]
        estimator: Estimator,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig::smoke(0),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(|p| config.resolve(p)))
        .context("no output directory: pass --out, set DIRSPEECH_OUT or `out` in the config")?;
    let format = match cli.format {
        Format::Table => ReportFormat::Table,
        Format::Structured => ReportFormat::Structured,
    };
    match &cli.command {
        Command::Simulate { unseen: true } => config.simulate.unseen_rooms = true,
        Command::DesignBeams { loading, fft_size } => {
            if let Some(l) = loading {
                config.beamformer.loading = *l;
            }
            if let Some(n) = fft_size {
                config.stft = dirspeech_core::stft::StftConfig::new(*n, n / 2, config.stft.window())?;
            }
        }
        _ => {}
    }
    config.validate()?;
    let pipeline = Pipeline::new(config, out, cli.jobs)?;

    let evaluation = match cli.command {
        Command::Smoke => {
            pipeline.smoke_sources()?;
            None
        }
        Command::Simulate { .. } => {
            pipeline.simulate()?;
            None
        }
        Command::Augment => {
            pipeline.augment()?;
            None
        }
        Command::DesignBeams { .. } => {
            pipeline.design_beams()?;
            None
        }
        Command::Beamform { input } => {
            pipeline.beamform(input)?;
            None
        }
        Command::Train { no_cdda } => {
            pipeline.train(!no_cdda && pipeline.config.cdda.enabled)?;
            None
        }
        Command::Localize { estimator } => {
            pipeline.localize(estimator)?;
            None
        }
        Command::Evaluate { manifest } => Some(pipeline.evaluate(manifest.as_deref())?),
        Command::Run { estimator } => Some(pipeline.run(estimator)?),
    };
    if let Some(e) = evaluation {
        print!("{}", e.render(format));
        if !e.unparseable.is_empty() {
            eprintln!("error: {} unparseable item(s): {}", e.unparseable.len(), e.unparseable.join(", "));
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}
