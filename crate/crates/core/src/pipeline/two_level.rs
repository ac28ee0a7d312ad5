//! The coarse-to-fine model: one group classifier and one category classifier per group.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::FeatureTable;
use super::frontend::Frontend;
use crate::audio::AudioClip;
use crate::dataset::{GroupLabel, Partition, SplitLevel, SplitSet, Taxonomy};
use crate::model::{
    argmax, read_bundle, train, write_bundle, Classifier, HeadConfig, MlpHead, ModelBundle, Standardizer,
    TrainConfig, TrainHistory,
};
use crate::{Error, Result};

/// An [`MlpHead`] behind the input standardizer fitted on its training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledHead {
    pub scaler: Standardizer,
    pub head: MlpHead<f32>,
}

impl ScaledHead {
    fn scale_batch(&self, x: &[f32], n: usize) -> Result<Vec<f32>> {
        let d = self.scaler.dim();
        if x.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                actual: x.len(),
            });
        }
        let mut out = Vec::with_capacity(x.len());
        for row in x.chunks(d) {
            out.extend(self.scaler.apply(row)?);
        }
        Ok(out)
    }
}

impl Classifier for ScaledHead {
    fn input_dim(&self) -> usize {
        self.head.input_dim()
    }

    fn n_classes(&self) -> usize {
        self.head.n_classes()
    }

    fn predict_proba(&self, x: &[f32]) -> Result<Vec<f32>> {
        self.head.forward(&self.scaler.apply(x)?)
    }

    fn predict_batch(&self, x: &[f32], n: usize) -> Result<Vec<usize>> {
        self.head.predict_batch(&self.scale_batch(x, n)?, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    pub head: HeadConfig,
    /// Fit a per-head standardizer on the training features.
    pub standardize: bool,
    /// Train the seven group heads concurrently; results are identical either way.
    pub parallel_groups: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            head: HeadConfig::default(),
            standardize: true,
            parallel_groups: false,
        }
    }
}

/// One trained classifier together with its training record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLevel {
    pub level: SplitLevel,
    /// Class names in label order.
    pub classes: Vec<String>,
    /// Best-validation parameters; this is what dispatch uses.
    pub best: ScaledHead,
    pub final_head: MlpHead<f32>,
    pub history: TrainHistory,
}

impl TrainedLevel {
    pub fn final_classifier(&self) -> ScaledHead {
        ScaledHead {
            scaler: self.best.scaler.clone(),
            head: self.final_head.clone(),
        }
    }
}

/// Class names for a level, in label order.
pub fn level_classes(level: SplitLevel, taxonomy: &Taxonomy) -> Vec<String> {
    match level {
        SplitLevel::Level1 => GroupLabel::ALL.iter().map(|g| g.name().to_string()).collect(),
        SplitLevel::Level2(g) => taxonomy.categories(g).to_vec(),
    }
}

fn init_seed(base: u64, level: SplitLevel) -> u64 {
    let stream = match level {
        SplitLevel::Level1 => 0,
        SplitLevel::Level2(g) => 1 + g.index() as u64,
    };
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream)
}

/// Trains the classifier for `level` on its own split.
pub fn train_level(
    table: &FeatureTable,
    splits: &SplitSet,
    level: SplitLevel,
    taxonomy: &Taxonomy,
    cfg: &PipelineConfig,
) -> Result<TrainedLevel> {
    let assignment = splits
        .get(level)
        .ok_or_else(|| Error::Config(format!("splits have no entry for level {level}")))?;
    let classes = level_classes(level, taxonomy);
    let train_raw = table.labeled_set(assignment, Partition::Train, taxonomy)?;
    let val_raw = table.labeled_set(assignment, Partition::Validation, taxonomy)?;

    let mut present: Vec<usize> = train_raw.labels().to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Config(format!(
            "level {level} has {} class(es) with training data; at least 2 are needed",
            present.len()
        )));
    }

    let scaler = if cfg.standardize {
        Standardizer::fit(&train_raw)?
    } else {
        Standardizer::identity(table.dim())
    };
    let train_set = scaler.apply_set(&train_raw)?;
    let val_set = scaler.apply_set(&val_raw)?;
    let head = MlpHead::init(table.dim(), classes.len(), &cfg.head, init_seed(cfg.train.seed, level))?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = init_seed(cfg.train.seed, level).wrapping_add(1);
    log::info!(
        "training level {level}: {} train / {} validation samples, {} classes",
        train_set.len(),
        val_set.len(),
        classes.len()
    );
    let trained = train(head, &train_set, &val_set, &train_cfg)?;
    Ok(TrainedLevel {
        level,
        classes,
        best: ScaledHead {
            scaler,
            head: trained.best_head,
        },
        final_head: trained.final_head,
        history: trained.history,
    })
}

/// Any subset of the eight trained classifiers, plus the frontend that produced their
/// inputs. This is what a model file holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub frontend: Frontend,
    pub taxonomy: Taxonomy,
    pub levels: BTreeMap<SplitLevel, TrainedLevel>,
}

#[derive(Serialize, Deserialize)]
struct LevelMeta {
    level: SplitLevel,
    classes: Vec<String>,
    scaler: Standardizer,
    history: TrainHistory,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    frontend: Frontend,
    taxonomy: Taxonomy,
    /// Heads are stored as `[best, final]` pairs in this order.
    levels: Vec<LevelMeta>,
}

impl ModelSet {
    pub fn new(frontend: Frontend, taxonomy: Taxonomy) -> Self {
        Self {
            frontend,
            taxonomy,
            levels: BTreeMap::new(),
        }
    }

    /// Trains the requested levels, in level order.
    pub fn train(
        frontend: Frontend,
        taxonomy: &Taxonomy,
        table: &FeatureTable,
        splits: &SplitSet,
        levels: &[SplitLevel],
        cfg: &PipelineConfig,
    ) -> Result<Self> {
        let mut set = Self::new(frontend, taxonomy.clone());
        let run = |level: &SplitLevel| train_level(table, splits, *level, taxonomy, cfg);
        let trained: Vec<Result<TrainedLevel>> = if cfg.parallel_groups {
            levels.par_iter().map(run).collect()
        } else {
            levels.iter().map(run).collect()
        };
        for t in trained {
            let t = t?;
            set.levels.insert(t.level, t);
        }
        Ok(set)
    }

    /// Adds or replaces levels from `other`; frontends and taxonomies must agree.
    pub fn merge(&mut self, other: ModelSet) -> Result<()> {
        if other.frontend != self.frontend || other.taxonomy != self.taxonomy {
            return Err(Error::Config("cannot merge models with different frontends or taxonomies".into()));
        }
        self.levels.extend(other.levels);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        SplitLevel::all().all(|l| self.levels.contains_key(&l))
    }

    pub fn to_bundle(&self) -> ModelBundle {
        let mut heads = Vec::new();
        let mut levels = Vec::new();
        for t in self.levels.values() {
            heads.push(t.best.head.clone());
            heads.push(t.final_head.clone());
            levels.push(LevelMeta {
                level: t.level,
                classes: t.classes.clone(),
                scaler: t.best.scaler.clone(),
                history: t.history.clone(),
            });
        }
        let meta = ModelMeta {
            frontend: self.frontend,
            taxonomy: self.taxonomy.clone(),
            levels,
        };
        ModelBundle {
            heads,
            metadata: serde_json::to_value(meta).expect("model metadata serializes"),
        }
    }

    pub fn from_bundle(bundle: ModelBundle) -> Result<Self> {
        let meta: ModelMeta = serde_json::from_value(bundle.metadata)?;
        if bundle.heads.len() != 2 * meta.levels.len() {
            return Err(Error::Container {
                kind: "model",
                reason: format!("{} heads for {} levels", bundle.heads.len(), meta.levels.len()),
            });
        }
        let mut set = Self::new(meta.frontend, meta.taxonomy);
        let mut heads = bundle.heads.into_iter();
        for m in meta.levels {
            let best = heads.next().expect("counted");
            let final_head = heads.next().expect("counted");
            if best.n_classes() != m.classes.len() || m.scaler.dim() != best.input_dim() {
                return Err(Error::Container {
                    kind: "model",
                    reason: format!("level {} shapes disagree with its metadata", m.level),
                });
            }
            set.levels.insert(
                m.level,
                TrainedLevel {
                    level: m.level,
                    classes: m.classes,
                    best: ScaledHead {
                        scaler: m.scaler,
                        head: best,
                    },
                    final_head,
                    history: m.history,
                },
            );
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_bundle(path, &self.to_bundle())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bundle(read_bundle(path)?)
    }

    /// The dispatching model; requires all eight classifiers.
    pub fn two_level(&self) -> Result<TwoLevelModel<ScaledHead>> {
        let get = |level: SplitLevel| {
            self.levels
                .get(&level)
                .map(|t| t.best.clone())
                .ok_or_else(|| Error::Config(format!("model has no classifier for level {level}")))
        };
        let level1 = get(SplitLevel::Level1)?;
        let level2 = GroupLabel::ALL
            .iter()
            .map(|&g| get(SplitLevel::Level2(g)).map(|c| (g, c)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        TwoLevelModel::new(self.frontend, self.taxonomy.clone(), level1, level2)
    }

    pub fn histories(&self) -> BTreeMap<SplitLevel, TrainHistory> {
        self.levels.iter().map(|(l, t)| (*l, t.history.clone())).collect()
    }
}

/// Trains all eight classifiers.
pub fn train_two_level(
    frontend: Frontend,
    taxonomy: &Taxonomy,
    table: &FeatureTable,
    splits: &SplitSet,
    cfg: &PipelineConfig,
) -> Result<ModelSet> {
    let level1 = ModelSet::train(frontend, taxonomy, table, splits, &[SplitLevel::Level1], cfg)?;
    let groups: Vec<SplitLevel> = GroupLabel::ALL.into_iter().map(SplitLevel::Level2).collect();
    let mut set = ModelSet::train(frontend, taxonomy, table, splits, &groups, cfg)?;
    set.merge(level1)?;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub group: GroupLabel,
    pub group_probs: Vec<f32>,
    pub category: String,
    pub category_probs: Vec<f32>,
}

/// Group classifier followed by the classifier of whichever group it picks.
#[derive(Debug, Clone)]
pub struct TwoLevelModel<C> {
    pub frontend: Frontend,
    pub taxonomy: Taxonomy,
    pub level1: C,
    pub level2: BTreeMap<GroupLabel, C>,
}

impl<C: Classifier> TwoLevelModel<C> {
    pub fn new(frontend: Frontend, taxonomy: Taxonomy, level1: C, level2: BTreeMap<GroupLabel, C>) -> Result<Self> {
        if level1.n_classes() != GroupLabel::ALL.len() {
            return Err(Error::Config(format!(
                "the group classifier has {} outputs, expected 7",
                level1.n_classes()
            )));
        }
        for g in GroupLabel::ALL {
            let head = level2
                .get(&g)
                .ok_or_else(|| Error::Config(format!("no classifier for group {g}")))?;
            let expected = taxonomy.categories(g).len();
            if head.n_classes() != expected {
                return Err(Error::Config(format!(
                    "the {g} classifier has {} outputs, the taxonomy lists {expected} categories",
                    head.n_classes()
                )));
            }
        }
        Ok(Self {
            frontend,
            taxonomy,
            level1,
            level2,
        })
    }

    pub fn level2_head(&self, group: GroupLabel) -> &C {
        &self.level2[&group]
    }

    /// The group classifier's argmax selects which category classifier runs.
    pub fn classify_features(&self, x: &[f32]) -> Result<Prediction> {
        let group_probs = self.level1.predict_proba(x)?;
        let group = GroupLabel::from_index(argmax(&group_probs)).expect("seven outputs");
        let category_probs = self.level2_head(group).predict_proba(x)?;
        let category = self.taxonomy.categories(group)[argmax(&category_probs)].clone();
        Ok(Prediction {
            group,
            group_probs,
            category,
            category_probs,
        })
    }

    pub fn classify(&self, clip: &AudioClip) -> Result<Prediction> {
        self.classify_features(&self.frontend.features(clip)?)
    }
}
