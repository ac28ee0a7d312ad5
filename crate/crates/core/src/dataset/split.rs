//! Seeded 8:2 / 8:2 train, validation and test splits.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::meta::{subset_for_group, EscRecord};
use super::taxonomy::{GroupLabel, Taxonomy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

/// Which classifier a split feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SplitLevel {
    Level1,
    Level2(GroupLabel),
}

impl SplitLevel {
    pub fn all() -> impl Iterator<Item = SplitLevel> {
        std::iter::once(SplitLevel::Level1).chain(GroupLabel::ALL.into_iter().map(SplitLevel::Level2))
    }

    /// RNG stream used for this level, so one base seed gives independent splits.
    fn stream(self) -> u64 {
        match self {
            SplitLevel::Level1 => 0,
            SplitLevel::Level2(g) => 1 + g.index() as u64,
        }
    }
}

impl fmt::Display for SplitLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitLevel::Level1 => f.write_str("1"),
            SplitLevel::Level2(g) => write!(f, "2:{g}"),
        }
    }
}

impl FromStr for SplitLevel {
    type Err = Error;

    /// Accepts `1` or `2:<group>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(SplitLevel::Level1);
        }
        match s.split_once(':') {
            Some(("2", group)) => Ok(SplitLevel::Level2(group.parse()?)),
            _ => Err(Error::Config(format!("level '{s}' is not '1' or '2:<group>'"))),
        }
    }
}

impl From<SplitLevel> for String {
    fn from(l: SplitLevel) -> Self {
        l.to_string()
    }
}

impl TryFrom<String> for SplitLevel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// `test = round_half_up(0.2 n)`, `validation = floor(0.2 (n - test))`, train takes the rest.
pub fn split_sizes(n: usize) -> SplitSizes {
    let test = (2 * n + 5) / 10;
    let validation = (n - test) / 5;
    SplitSizes {
        train: n - test - validation,
        validation,
        test,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub filename: String,
    pub category: String,
    pub group: GroupLabel,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub level: SplitLevel,
    pub stratified: bool,
    /// One entry per input record, in input order.
    pub entries: Vec<SplitEntry>,
}

impl SplitAssignment {
    pub fn sizes(&self) -> SplitSizes {
        let count = |p| self.entries.iter().filter(|e| e.partition == p).count();
        SplitSizes {
            train: count(Partition::Train),
            validation: count(Partition::Validation),
            test: count(Partition::Test),
        }
    }

    pub fn partition_of(&self, filename: &str) -> Option<Partition> {
        self.entries
            .iter()
            .find(|e| e.filename == filename)
            .map(|e| e.partition)
    }

    pub fn filenames(&self, partition: Partition) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |e| e.partition == partition)
            .map(|e| e.filename.as_str())
    }
}

/// Distributes `total` over buckets proportionally to `weights` by largest remainder.
/// Equal remainders are ordered by `tie_order`.
fn apportion(weights: &[usize], total: usize, tie_order: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut quota: Vec<usize> = weights.iter().map(|&w| w * total / sum).collect();
    let short = total - quota.iter().sum::<usize>();
    let mut ranked: Vec<usize> = tie_order.to_vec();
    ranked.sort_by_key(|&i| std::cmp::Reverse(weights[i] * total % sum));
    for &i in ranked.iter().take(short) {
        quota[i] += 1;
    }
    quota
}

/// Seeded split of `records` tagged as `level`. Stratified splits apportion the test and
/// validation totals across categories so each category keeps its share.
pub fn split(records: &[EscRecord], seed: u64, stratified: bool, level: SplitLevel) -> SplitAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(level.stream());
    let n = records.len();
    let sizes = split_sizes(n);
    let mut partition = vec![Partition::Train; n];

    if stratified {
        let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_category.entry(r.category.as_str()).or_default().push(i);
        }
        let mut buckets: Vec<Vec<usize>> = by_category.into_values().collect();
        for b in &mut buckets {
            b.shuffle(&mut rng);
        }
        let mut tie_order: Vec<usize> = (0..buckets.len()).collect();
        tie_order.shuffle(&mut rng);

        let counts: Vec<usize> = buckets.iter().map(Vec::len).collect();
        let test = apportion(&counts, sizes.test, &tie_order);
        let rest: Vec<usize> = counts.iter().zip(&test).map(|(c, t)| c - t).collect();
        let validation = apportion(&rest, sizes.validation, &tie_order);
        for (k, bucket) in buckets.iter().enumerate() {
            for (j, &i) in bucket.iter().enumerate() {
                partition[i] = if j < test[k] {
                    Partition::Test
                } else if j < test[k] + validation[k] {
                    Partition::Validation
                } else {
                    Partition::Train
                };
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for (j, &i) in order.iter().enumerate() {
            partition[i] = if j < sizes.test {
                Partition::Test
            } else if j < sizes.test + sizes.validation {
                Partition::Validation
            } else {
                Partition::Train
            };
        }
    }

    SplitAssignment {
        seed,
        level,
        stratified,
        entries: records
            .iter()
            .zip(partition)
            .map(|(r, partition)| SplitEntry {
                filename: r.filename.clone(),
                category: r.category.clone(),
                group: r.group,
                partition,
            })
            .collect(),
    }
}

/// Splits for the Level-1 classifier and every Level-2 group from one base seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub seed: u64,
    pub stratified: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub levels: Vec<SplitAssignment>,
}

impl SplitSet {
    pub fn build(records: &[EscRecord], seed: u64, stratified: bool) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let levels = SplitLevel::all()
            .map(|level| match level {
                SplitLevel::Level1 => split(records, seed, stratified, level),
                SplitLevel::Level2(g) => split(&subset_for_group(records, g), seed, stratified, level),
            })
            .collect();
        Ok(Self {
            seed,
            stratified,
            warnings: Vec::new(),
            levels,
        })
    }

    /// Records (and logs) disagreements between the built-in taxonomy and the published
    /// per-group counts. Custom taxonomies have no reference to compare against.
    pub fn record_taxonomy_warnings(&mut self, taxonomy: &Taxonomy) {
        if *taxonomy != Taxonomy::esc50() {
            return;
        }
        for w in taxonomy.reference_warnings() {
            log::warn!("{w}");
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
    }

    pub fn get(&self, level: SplitLevel) -> Option<&SplitAssignment> {
        self.levels.iter().find(|a| a.level == level)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
