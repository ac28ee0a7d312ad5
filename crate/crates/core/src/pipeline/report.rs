//! Isolated and end-to-end evaluation, and the experiment report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::corpus::FeatureTable;
use super::two_level::{level_classes, ModelSet, TwoLevelModel};
use crate::dataset::{Partition, SplitLevel, SplitSet, Taxonomy};
use crate::model::{evaluate, Classifier, Metrics, TrainHistory};
use crate::modifiers::FiltrationMode;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: SplitLevel,
    /// `"Level 1"` or the group name.
    pub title: String,
    pub classes: Vec<String>,
    pub test_size: usize,
    /// Accuracy of the dispatch (best-validation) head on the level's test set.
    pub metrics: Metrics,
    /// Accuracy of the last-epoch head on the same test set, when known.
    pub final_head_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndToEnd {
    /// Fraction of Level-1 test clips whose predicted category is correct.
    pub accuracy: f64,
    /// Fraction routed to the correct group.
    pub routing_accuracy: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub train_secs: Option<f64>,
    pub eval_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: FiltrationMode,
    pub levels: Vec<LevelReport>,
    pub end_to_end: Option<EndToEnd>,
    pub config: serde_json::Value,
    pub timings: Timings,
}

fn title(level: SplitLevel) -> String {
    match level {
        SplitLevel::Level1 => "Level 1".to_string(),
        SplitLevel::Level2(g) => g.name().to_string(),
    }
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.2}%", 100.0 * v))
}

impl ExperimentReport {
    pub fn level(&self, level: SplitLevel) -> Option<&LevelReport> {
        self.levels.iter().find(|l| l.level == level)
    }

    /// One column per classifier, with the two accuracy rows.
    pub fn markdown(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "| Filtration Mode: {} |", self.mode);
        for l in &self.levels {
            let _ = write!(out, " {} |", l.title);
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.levels {
            out.push_str("---|");
        }
        out.push('\n');
        out.push_str("| Highest Validation Accuracy |");
        for l in &self.levels {
            let _ = write!(out, " {} |", fmt_pct(l.metrics.highest_validation_accuracy));
        }
        out.push('\n');
        out.push_str("| Classification Accuracy |");
        for l in &self.levels {
            let _ = write!(out, " {} |", fmt_pct(Some(l.metrics.classification_accuracy)));
        }
        out.push('\n');
        if let Some(e) = &self.end_to_end {
            let _ = writeln!(
                out,
                "\nEnd-to-end category accuracy: {} ({} test clips, {} routed to the correct group)",
                fmt_pct(Some(e.accuracy)),
                e.samples,
                fmt_pct(Some(e.routing_accuracy))
            );
        }
        out
    }
}

fn evaluate_level<C: Classifier + ?Sized>(
    level: SplitLevel,
    classifier: &C,
    table: &FeatureTable,
    splits: &SplitSet,
    taxonomy: &Taxonomy,
    history: Option<&TrainHistory>,
) -> Result<LevelReport> {
    let assignment = splits
        .get(level)
        .ok_or_else(|| Error::Config(format!("splits have no entry for level {level}")))?;
    let test = table.labeled_set(assignment, Partition::Test, taxonomy)?;
    let mut metrics = evaluate(classifier, &test)?;
    if let Some(h) = history {
        metrics = metrics.with_history(h);
    }
    Ok(LevelReport {
        level,
        title: title(level),
        classes: level_classes(level, taxonomy),
        test_size: test.len(),
        metrics,
        final_head_accuracy: None,
    })
}

/// Each classifier on its own test set, Level-2 classifiers with ground-truth routing.
/// Produces eight blocks: Level 1 then the groups in order.
pub fn evaluate_isolated<C: Classifier>(
    model: &TwoLevelModel<C>,
    table: &FeatureTable,
    splits: &SplitSet,
    histories: &BTreeMap<SplitLevel, TrainHistory>,
) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let mut levels = Vec::new();
    for level in SplitLevel::all() {
        let classifier: &C = match level {
            SplitLevel::Level1 => &model.level1,
            SplitLevel::Level2(g) => model.level2_head(g),
        };
        levels.push(evaluate_level(level, classifier, table, splits, &model.taxonomy, histories.get(&level))?);
    }
    Ok(ExperimentReport {
        mode: model.frontend.mode,
        levels,
        end_to_end: None,
        config: serde_json::to_value(model.frontend)?,
        timings: Timings {
            train_secs: None,
            eval_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// Full dispatch on the Level-1 test set; a wrong group always means a wrong category.
pub fn evaluate_end_to_end<C: Classifier>(
    model: &TwoLevelModel<C>,
    table: &FeatureTable,
    splits: &SplitSet,
) -> Result<EndToEnd> {
    let assignment = splits
        .get(SplitLevel::Level1)
        .ok_or_else(|| Error::Config("splits have no Level-1 entry".into()))?;
    let (mut correct, mut routed, mut samples) = (0usize, 0usize, 0usize);
    for e in assignment.entries.iter().filter(|e| e.partition == Partition::Test) {
        let Some(x) = table.get(&e.filename) else {
            continue;
        };
        let truth = model.taxonomy.group_of(&e.category)?;
        let p = model.classify_features(x)?;
        samples += 1;
        if p.group == truth {
            routed += 1;
            if p.category == e.category {
                correct += 1;
            }
        }
    }
    if samples == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(EndToEnd {
        accuracy: correct as f64 / samples as f64,
        routing_accuracy: routed as f64 / samples as f64,
        samples,
    })
}

/// Evaluates whichever classifiers a model file holds. End-to-end accuracy needs all eight.
pub fn evaluate_model_set(
    set: &ModelSet,
    table: &FeatureTable,
    splits: &SplitSet,
    end_to_end: bool,
) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let mut levels = Vec::new();
    for (level, trained) in &set.levels {
        let mut report = evaluate_level(*level, &trained.best, table, splits, &set.taxonomy, Some(&trained.history))?;
        let assignment = splits.get(*level).expect("checked by evaluate_level");
        let test = table.labeled_set(assignment, Partition::Test, &set.taxonomy)?;
        report.final_head_accuracy = Some(evaluate(&trained.final_classifier(), &test)?.classification_accuracy);
        levels.push(report);
    }
    let end_to_end = if end_to_end {
        Some(evaluate_end_to_end(&set.two_level()?, table, splits)?)
    } else {
        None
    };
    Ok(ExperimentReport {
        mode: set.frontend.mode,
        levels,
        end_to_end,
        config: serde_json::to_value(set.frontend)?,
        timings: Timings {
            train_secs: None,
            eval_secs: start.elapsed().as_secs_f64(),
        },
    })
}
