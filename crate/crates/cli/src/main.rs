//! `esc`: preprocessing, splitting, training, evaluation and inference for the two-level
//! environmental sound classifier.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use esc_core::audio::read_wav_file;
use esc_core::dataset::{SplitLevel, SplitSet, Taxonomy};
use esc_core::features::{read_tensor_file, render_png, Matrix, SpectrogramMatrix};
use esc_core::model::TrainConfig;
use esc_core::modifiers::{FiltrationMode, QuotientBasis};
use esc_core::pipeline::{
    evaluate_model_set, load_dataset, preprocess_corpus, FeatureManifest, FeatureTable, ModelSet, PipelineConfig,
    PrepOptions, AUDIO_DIR,
};
use log::{info, warn};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "esc", version, about = "Two-level environmental sound classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn every clip of a dataset into a pooled feature vector.
    Prep {
        /// Dataset root holding `meta/esc50.csv` and `audio/`.
        #[arg(long)]
        dataset: PathBuf,
        /// Filtration mode, e.g. "No Filter", audio-crop, pcen, band_stop.
        #[arg(long)]
        mode: FiltrationMode,
        #[arg(long)]
        out: PathBuf,
        /// Recorded in the manifest.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Audio Crop treats samples with |x| at or below this as silence.
        #[arg(long)]
        crop_threshold: Option<f64>,
        #[arg(long, value_name = "kept|original")]
        crop_quotient_basis: Option<QuotientBasis>,
        /// CSV of `category,group` rows replacing the built-in taxonomy.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Also store full spectrograms for `export`.
        #[arg(long)]
        keep_spectrograms: bool,
    },
    /// Build seeded train/validation/test splits for every level.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Shuffle the whole pool instead of apportioning per category.
        #[arg(long)]
        no_stratify: bool,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one level, a single group head, or all eight classifiers.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        splits: PathBuf,
        /// `1`, `2:<group>` or `all`.
        #[arg(long, default_value = "all", value_parser = parse_levels)]
        level: Levels,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        /// Seeds weight initialisation and batch order.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Train the group heads concurrently.
        #[arg(long)]
        parallel: bool,
        /// Replace an existing model file instead of merging into it.
        #[arg(long)]
        fresh: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model on the test partitions.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        splits: PathBuf,
        /// Also run the Level-1 test clips through the full dispatch.
        #[arg(long)]
        end_to_end: bool,
        /// JSON report path; a Markdown table is written next to it.
        #[arg(long)]
        report: PathBuf,
    },
    /// Predict the group and category of one WAV file.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        wav: PathBuf,
    },
    /// Write one grayscale PNG per clip.
    Export {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        png: PathBuf,
    },
}

#[derive(Debug, Clone)]
enum Levels {
    All,
    One(SplitLevel),
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Levels::All);
    }
    s.parse().map(Levels::One).map_err(|e: esc_core::Error| e.to_string())
}

fn load_taxonomy(path: Option<&Path>) -> anyhow::Result<Taxonomy> {
    match path {
        None => Ok(Taxonomy::esc50()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Taxonomy::from_csv(&text)?)
        }
    }
}

fn load_features(dir: &Path) -> anyhow::Result<(FeatureManifest, FeatureTable)> {
    let manifest = FeatureManifest::load(dir)?;
    let table = FeatureTable::load(dir, &manifest)?;
    Ok((manifest, table))
}

fn stem(filename: &str) -> &str {
    Path::new(filename).file_stem().and_then(|s| s.to_str()).unwrap_or(filename)
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Prep {
            dataset,
            mode,
            out,
            seed,
            crop_threshold,
            crop_quotient_basis,
            taxonomy,
            keep_spectrograms,
        } => {
            let mut options = PrepOptions::new(mode);
            options.seed = seed;
            options.keep_spectrograms = keep_spectrograms;
            options.taxonomy = load_taxonomy(taxonomy.as_deref())?;
            let crop = &mut options.frontend.modifiers.crop;
            if let Some(t) = crop_threshold {
                crop.silence_threshold = t;
            }
            if let Some(b) = crop_quotient_basis {
                crop.quotient_basis = b;
            }
            let start = Instant::now();
            let manifest = preprocess_corpus(&dataset, &out, &options)?;
            for f in &manifest.failures {
                warn!("skipped {}: {}", f.filename, f.error);
            }
            info!(
                "{}: {} clips prepared, {} failed, {:.1} s",
                mode,
                manifest.entries.len(),
                manifest.failures.len(),
                start.elapsed().as_secs_f64()
            );
            if let Some(t) = manifest.max_time {
                info!("max_time = {t} samples");
            }
            if manifest.entries.is_empty() {
                bail!(esc_core::Error::EmptyDataset);
            }
        }
        Command::Split {
            dataset,
            seed,
            no_stratify,
            taxonomy,
            out,
        } => {
            let taxonomy = load_taxonomy(taxonomy.as_deref())?;
            let records = load_dataset(&dataset, &taxonomy)?;
            let mut set = SplitSet::build(&records, seed, !no_stratify)?;
            set.record_taxonomy_warnings(&taxonomy);
            for a in &set.levels {
                let s = a.sizes();
                info!("level {}: train {} / validation {} / test {}", a.level, s.train, s.validation, s.test);
            }
            set.save(&out)?;
        }
        Command::Train {
            features,
            splits,
            level,
            epochs,
            lr,
            batch,
            seed,
            parallel,
            fresh,
            out,
        } => {
            let (manifest, table) = load_features(&features)?;
            let splits = SplitSet::load(&splits)?;
            let cfg = PipelineConfig {
                train: TrainConfig {
                    learning_rate: lr,
                    epochs,
                    batch_size: batch,
                    seed,
                    ..TrainConfig::default()
                },
                parallel_groups: parallel,
                ..PipelineConfig::default()
            };
            cfg.train.validate()?;
            let levels: Vec<SplitLevel> = match level {
                Levels::All => SplitLevel::all().collect(),
                Levels::One(l) => vec![l],
            };
            let start = Instant::now();
            let trained = ModelSet::train(manifest.frontend, &manifest.taxonomy, &table, &splits, &levels, &cfg)?;
            for (level, t) in &trained.levels {
                let best = t.history.highest_validation_accuracy().unwrap_or(0.0);
                info!("level {level}: best validation accuracy {:.2}%", 100.0 * best);
            }
            info!("trained {} classifier(s) in {:.1} s", levels.len(), start.elapsed().as_secs_f64());
            let set = if out.exists() && !fresh {
                let mut existing = ModelSet::load(&out)?;
                existing.merge(trained)?;
                existing
            } else {
                trained
            };
            if !set.is_complete() {
                info!("{} of 8 classifiers present in {}", set.levels.len(), out.display());
            }
            set.save(&out)?;
        }
        Command::Eval {
            model,
            features,
            splits,
            end_to_end,
            report,
        } => {
            let set = ModelSet::load(&model)?;
            let (manifest, table) = load_features(&features)?;
            if manifest.frontend != set.frontend {
                warn!("features were prepared with a different frontend than the model was trained on");
            }
            let splits = SplitSet::load(&splits)?;
            let result = evaluate_model_set(&set, &table, &splits, end_to_end)?;
            let json = serde_json::to_string_pretty(&result)?;
            std::fs::write(&report, json).with_context(|| format!("writing {}", report.display()))?;
            let markdown = result.markdown();
            let md_path = report.with_extension("md");
            std::fs::write(&md_path, &markdown).with_context(|| format!("writing {}", md_path.display()))?;
            println!("{markdown}");
        }
        Command::Classify { model, wav } => {
            let model = ModelSet::load(&model)?.two_level()?;
            let clip = read_wav_file(&wav)?;
            let prediction = model.classify(&clip)?;
            println!("{}", serde_json::to_string_pretty(&prediction)?);
        }
        Command::Export { features, png } => {
            let manifest = FeatureManifest::load(&features)?;
            std::fs::create_dir_all(&png).with_context(|| format!("creating {}", png.display()))?;
            let frontend = manifest.frontend;
            for entry in &manifest.entries {
                let spec = match &entry.spectrogram_file {
                    Some(file) => {
                        let t = read_tensor_file(&features.join(file))?;
                        if t.dims.len() != 2 {
                            bail!(esc_core::Error::Container {
                                kind: "ESCT",
                                reason: format!("{file} is not a matrix"),
                            });
                        }
                        SpectrogramMatrix {
                            values: Matrix::from_vec(t.dims[0], t.dims[1], t.data.iter().map(|&v| v as f64).collect()),
                            unit: frontend.unit(),
                            stft: frontend.features.stft,
                            mel: frontend.features.mel,
                        }
                    }
                    None => {
                        let path = manifest.dataset_dir.join(AUDIO_DIR).join(&entry.record.filename);
                        frontend.spectrogram(&read_wav_file(&path)?)?
                    }
                };
                let path = png.join(format!("{}.png", stem(&entry.record.filename)));
                std::fs::write(&path, render_png(&spec)?).with_context(|| format!("writing {}", path.display()))?;
            }
            info!("wrote {} images to {}", manifest.entries.len(), png.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let diverged = err
        .chain()
        .any(|e| e.downcast_ref::<esc_core::Error>().is_some_and(esc_core::Error::is_divergence));
    if diverged {
        EXIT_DIVERGED
    } else {
        EXIT_DATA
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
