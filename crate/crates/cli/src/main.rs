//! `mwi`: build motion-weighted representation images from video, train and
//! evaluate the classifier, sweep pipeline parameters and benchmark
//! throughput.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 for bad
//! or missing input data, 3 for failures while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use mwi_core::cnn::{evaluate, load_checkpoint, save_checkpoint, write_training_log, Checkpoint};
use mwi_core::dataset::{read_corpus, scan_dataset, split, write_corpus, write_door_dataset, write_manifest, Split};
use mwi_core::harness::{
    emit_report, prepare_corpus, read_sweep_csv, run_bench, run_sweep, scoring_split, train_and_evaluate,
    write_sweep_csv, ExperimentConfig, HarnessError, ReportFormat, SweepGrid, SweepOptions,
};
use mwi_core::motion::represent;
use mwi_core::videoio::synth::pacing_scene;
use mwi_core::videoio::{open_y4m, read_pgm_sequence, write_pgm, FrameStream};
use mwi_core::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "mwi", version, about = "Motion-weighted image action recognition")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML file with [pipeline], [train], [dataset] and [sweep] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set pipeline.beta=0.9`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn one video into a representation image.
    Represent {
        /// A .y4m file or a directory of .pgm frames.
        video: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Trim samples from both ends, as for dataset videos.
        #[arg(long)]
        training: bool,
    },
    /// Scan a dataset, split it, and write the manifest and representation corpus.
    Prepare {
        root: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train a classifier on a prepared corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Per-epoch loss CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a checkpoint on one split of a corpus.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Defaults to test, or validation if test is empty.
        #[arg(long)]
        split: Option<Split>,
    },
    /// Retrain and score over the beta, d and w grid.
    Sweep {
        root: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write train_seconds as 0 so reruns give identical bytes.
        #[arg(long)]
        reproducible: bool,
    },
    /// Measure pipeline throughput.
    Bench {
        /// Frames of synthetic 160x120 input when no --input is given.
        #[arg(long, default_value_t = 600)]
        frames: usize,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        /// A .y4m file or a directory of .pgm frames instead of synthetic input.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also time inference with this checkpoint.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Render sweep results as CSV or SVG.
    Report {
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Inferred from the output extension when omitted.
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Write a synthetic door-scenario dataset (approach vs pass-by).
    Synth {
        output: PathBuf,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env()?;
    for o in &global.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_video(path: &Path) -> Result<FrameStream, Error> {
    if path.is_dir() {
        Ok(read_pgm_sequence(path, "*.pgm", None)?)
    } else {
        Ok(open_y4m(path)?)
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Represent {
            video,
            output,
            training,
        } => {
            let image = represent(open_video(&video)?, &cfg.pipeline, training)?;
            write_pgm(&image.to_frame(), &output)?;
            println!(
                "{}: {} samples -> {}x{} {}",
                video.display(),
                image.sample_count(),
                image.width(),
                image.height(),
                output.display()
            );
        }
        Command::Prepare { root, output } => {
            let index = scan_dataset(&root)?;
            let sets = split(&index.entries, &cfg.dataset.split)?;
            std::fs::create_dir_all(&output).map_err(|source| HarnessError::Write {
                path: output.clone(),
                source,
            })?;
            write_manifest(output.join("manifest.csv"), &sets)?;
            let corpus = prepare_corpus(&index, &sets, &cfg)?;
            write_corpus(&output, &corpus)?;
            println!(
                "{} classes, {} videos -> {} train / {} validation / {} test examples in {}",
                corpus.classes.len(),
                index.entries.len(),
                corpus.train.len(),
                corpus.validation.len(),
                corpus.test.len(),
                output.display()
            );
        }
        Command::Train { corpus, output, log } => {
            let corpus = read_corpus(&corpus)?;
            let (outcome, metrics) = train_and_evaluate(&corpus, &cfg)?;
            if let Some(path) = log {
                write_training_log(path, &outcome.log)?;
            }
            let metadata = serde_json::json!({
                "model": cfg.model.name(),
                "pipeline": cfg.pipeline,
                "train": cfg.train,
                "best_epoch": outcome.best_epoch,
                "scored_split": scoring_split(&corpus).name(),
                "accuracy": metrics.accuracy,
            });
            save_checkpoint(
                &output,
                &Checkpoint {
                    network: outcome.network,
                    classes: corpus.classes.clone(),
                    metadata,
                },
            )?;
            info!("saved {}", output.display());
            print_json(&metrics);
        }
        Command::Eval { corpus, model, split } => {
            let corpus = read_corpus(&corpus)?;
            let ckpt = load_checkpoint(&model)?;
            if ckpt.classes != corpus.classes {
                return Err(HarnessError::Mismatch(format!(
                    "checkpoint classes {:?} differ from corpus classes {:?}",
                    ckpt.classes, corpus.classes
                ))
                .into());
            }
            let split = split.unwrap_or_else(|| scoring_split(&corpus));
            let examples = corpus.get(split);
            if examples.is_empty() {
                return Err(HarnessError::Config(format!("split {split} is empty")).into());
            }
            print_json(&evaluate(&ckpt.network, examples)?);
        }
        Command::Sweep {
            root,
            output,
            reproducible,
        } => {
            let grid = SweepGrid::from_config(&cfg);
            let rows = run_sweep(&grid, &root, SweepOptions { reproducible })?;
            write_sweep_csv(&output, &rows)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} cells ({failed} failed) -> {}", rows.len(), output.display());
        }
        Command::Bench {
            frames,
            repeat,
            input,
            model,
        } => {
            let frames = match input {
                Some(path) => open_video(&path)?.collect_frames()?,
                None => pacing_scene(frames, cfg.pipeline.rng_seed).frames(),
            };
            let network = model.map(load_checkpoint).transpose()?.map(|c| c.network);
            let report = run_bench(&frames, &cfg.pipeline, repeat, network.as_ref())?;
            print_json(&report);
        }
        Command::Report { csv, output, format } => {
            let format = match format.or_else(|| ReportFormat::from_path(&output)) {
                Some(f) => f,
                None => {
                    return Err(HarnessError::Config(format!(
                        "{}: cannot tell the format; pass --format csv|svg",
                        output.display()
                    ))
                    .into())
                }
            };
            let rows = read_sweep_csv(&csv)?;
            emit_report(&rows, format, &output)?;
            println!("{} rows -> {}", rows.len(), output.display());
        }
        Command::Synth {
            output,
            per_class,
            seed,
        } => {
            let index = write_door_dataset(&output, per_class, seed)?;
            println!("{} videos in {}", index.entries.len(), output.display());
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Runtime => 3,
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
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
