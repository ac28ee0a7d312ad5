//! Corpus preprocessing: ESC-50 layout in, pooled feature files and a manifest out.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frontend::Frontend;
use crate::audio::{read_wav_file, resampled_len};
use crate::dataset::{parse_meta_csv, EscRecord, Partition, SplitAssignment, SplitLevel, Taxonomy};
use crate::features::{extract_spectrogram, pool_features, read_tensor_file, write_tensor_file, Tensor};
use crate::model::LabeledSet;
use crate::modifiers::{max_time_len, FiltrationMode};
use crate::{Error, Result};

pub const META_PATH: &str = "meta/esc50.csv";
pub const AUDIO_DIR: &str = "audio";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURE_DIR: &str = "features";
pub const SPECTROGRAM_DIR: &str = "spectrograms";

/// Reads `meta/esc50.csv` under `dataset_dir`.
pub fn load_dataset(dataset_dir: &Path, taxonomy: &Taxonomy) -> Result<Vec<EscRecord>> {
    let path = dataset_dir.join(META_PATH);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_meta_csv(&text, taxonomy)
}

#[derive(Debug, Clone)]
pub struct PrepOptions {
    pub frontend: Frontend,
    pub taxonomy: Taxonomy,
    /// Recorded in the manifest; preprocessing itself is deterministic.
    pub seed: u64,
    /// Also store each spectrogram as an `ESCT` matrix for later export.
    pub keep_spectrograms: bool,
}

impl PrepOptions {
    pub fn new(mode: FiltrationMode) -> Self {
        Self {
            frontend: Frontend::new(mode),
            taxonomy: Taxonomy::esc50(),
            seed: 0,
            keep_spectrograms: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub record: EscRecord,
    /// Relative to the manifest directory.
    pub feature_file: String,
    pub spectrogram_file: Option<String>,
    /// Samples in the clip after resampling and the modifier.
    pub prepared_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepFailure {
    pub filename: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub mode: FiltrationMode,
    pub frontend: Frontend,
    pub seed: u64,
    pub dataset_dir: PathBuf,
    /// Corpus-wide crop target, set in Audio Crop mode.
    pub max_time: Option<usize>,
    pub taxonomy: Taxonomy,
    pub feature_dim: usize,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<PrepFailure>,
}

impl FeatureManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(&path, e))
    }

    pub fn records(&self) -> Vec<EscRecord> {
        self.entries.iter().map(|e| e.record.clone()).collect()
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    filename: &'a str,
    category: &'a str,
    group: crate::dataset::GroupLabel,
    frontend: &'a Frontend,
}

fn stem(filename: &str) -> &str {
    Path::new(filename)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(filename)
}

fn process_file(
    dataset_dir: &Path,
    out_dir: &Path,
    record: &EscRecord,
    frontend: &Frontend,
    keep_spectrograms: bool,
) -> Result<ManifestEntry> {
    let clip = read_wav_file(dataset_dir.join(AUDIO_DIR).join(&record.filename))?;
    let prepared = frontend.prepare(&clip)?;
    let spec = extract_spectrogram(&prepared, &frontend.features, frontend.unit())?;
    let pooled = pool_features(&spec)?.to_f32();
    let provenance = Provenance {
        filename: &record.filename,
        category: &record.category,
        group: record.group,
        frontend,
    };

    let feature_file = format!("{FEATURE_DIR}/{}.esct", stem(&record.filename));
    let tensor = Tensor::new(vec![pooled.len()], pooled)?;
    write_tensor_file(&out_dir.join(&feature_file), &tensor, &provenance)?;

    let spectrogram_file = if keep_spectrograms {
        let name = format!("{SPECTROGRAM_DIR}/{}.esct", stem(&record.filename));
        write_tensor_file(&out_dir.join(&name), &Tensor::from_spectrogram(&spec), &provenance)?;
        Some(name)
    } else {
        None
    };
    Ok(ManifestEntry {
        record: record.clone(),
        feature_file,
        spectrogram_file,
        prepared_len: prepared.len(),
    })
}

/// Runs every clip of the corpus through the frontend and writes one feature file per
/// clip plus `manifest.json`. Unreadable or unusable clips are listed under `failures`
/// and the run continues.
///
/// In Audio Crop mode the crop target is first set to the longest clip in the corpus.
pub fn preprocess_corpus(dataset_dir: &Path, out_dir: &Path, options: &PrepOptions) -> Result<FeatureManifest> {
    let records = load_dataset(dataset_dir, &options.taxonomy)?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for sub in [FEATURE_DIR, SPECTROGRAM_DIR] {
        if sub == SPECTROGRAM_DIR && !options.keep_spectrograms {
            continue;
        }
        let dir = out_dir.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let mut frontend = options.frontend;
    let mut failures = Vec::new();
    let mut max_time = None;
    let mut usable: Vec<&EscRecord> = records.iter().collect();

    if frontend.mode == FiltrationMode::AudioCrop {
        let lengths: Vec<Result<usize>> = records
            .par_iter()
            .map(|r| {
                let clip = read_wav_file(dataset_dir.join(AUDIO_DIR).join(&r.filename))?;
                Ok(resampled_len(clip.len(), clip.sample_rate(), frontend.sample_rate))
            })
            .collect();
        let mut ok = Vec::new();
        usable.clear();
        for (r, len) in records.iter().zip(lengths) {
            match len {
                Ok(n) => {
                    ok.push(n);
                    usable.push(r);
                }
                Err(e) => failures.push(PrepFailure {
                    filename: r.filename.clone(),
                    error: e.to_string(),
                }),
            }
        }
        let longest = max_time_len(&ok)?;
        frontend.modifiers.crop.max_time = longest;
        max_time = Some(longest);
        log::info!("audio crop target: {longest} samples");
    }

    let results: Vec<Result<ManifestEntry>> = usable
        .par_iter()
        .map(|r| process_file(dataset_dir, out_dir, r, &frontend, options.keep_spectrograms))
        .collect();
    let mut entries = Vec::with_capacity(results.len());
    for (r, result) in usable.iter().zip(results) {
        match result {
            Ok(entry) => entries.push(entry),
            Err(e) => {
                log::warn!("{}: {e}", r.filename);
                failures.push(PrepFailure {
                    filename: r.filename.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    failures.sort_by(|a, b| a.filename.cmp(&b.filename));

    let manifest = FeatureManifest {
        mode: frontend.mode,
        frontend,
        seed: options.seed,
        dataset_dir: dataset_dir.to_path_buf(),
        max_time,
        taxonomy: options.taxonomy.clone(),
        feature_dim: frontend.feature_dim(),
        entries,
        failures,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Pooled feature vectors keyed by filename.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, filename: impl Into<String>, features: Vec<f32>) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: features.len(),
            });
        }
        self.vectors.insert(filename.into(), features);
        Ok(())
    }

    /// Reads every feature file listed in the manifest under `dir`.
    pub fn load(dir: &Path, manifest: &FeatureManifest) -> Result<Self> {
        let loaded: Vec<Result<(String, Vec<f32>)>> = manifest
            .entries
            .par_iter()
            .map(|e| {
                let t = read_tensor_file(&dir.join(&e.feature_file))?;
                Ok((e.record.filename.clone(), t.data))
            })
            .collect();
        let mut table = Self::new(manifest.feature_dim);
        for item in loaded {
            let (name, v) = item?;
            table.insert(name, v)?;
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, filename: &str) -> Option<&[f32]> {
        self.vectors.get(filename).map(Vec::as_slice)
    }

    /// Features of one partition, labelled for `assignment.level`: group index at Level 1,
    /// position within the group at Level 2. Entries without features are skipped.
    pub fn labeled_set(
        &self,
        assignment: &SplitAssignment,
        partition: Partition,
        taxonomy: &Taxonomy,
    ) -> Result<LabeledSet> {
        let mut set = LabeledSet::empty(self.dim);
        let mut missing = 0usize;
        for e in assignment.entries.iter().filter(|e| e.partition == partition) {
            let Some(x) = self.get(&e.filename) else {
                missing += 1;
                continue;
            };
            let (group, position) = taxonomy.locate(&e.category)?;
            let label = match assignment.level {
                SplitLevel::Level1 => group.index(),
                SplitLevel::Level2(g) => {
                    if g != group {
                        return Err(Error::Config(format!(
                            "{} ({}) is in the {g} split but belongs to {group}",
                            e.filename, e.category
                        )));
                    }
                    position
                }
            };
            set.push(x, label)?;
        }
        if missing > 0 {
            log::warn!(
                "level {}: {missing} {partition:?} entries have no features",
                assignment.level
            );
        }
        Ok(set)
    }
}
