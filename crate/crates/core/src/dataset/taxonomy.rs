//! The seven-group taxonomy over the ESC-50 categories.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shipped mapping from the display names used in the group table to ESC-50 labels.
pub const CATEGORY_NAMES_CSV: &str = include_str!("../../data/category_names.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupLabel {
    Animal,
    Birds,
    Nature,
    Human,
    #[serde(rename = "Machine Sounds")]
    MachineSounds,
    Domestic,
    Outdoor,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 7] = [
        GroupLabel::Animal,
        GroupLabel::Birds,
        GroupLabel::Nature,
        GroupLabel::Human,
        GroupLabel::MachineSounds,
        GroupLabel::Domestic,
        GroupLabel::Outdoor,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupLabel::Animal => "Animal",
            GroupLabel::Birds => "Birds",
            GroupLabel::Nature => "Nature",
            GroupLabel::Human => "Human",
            GroupLabel::MachineSounds => "Machine Sounds",
            GroupLabel::Domestic => "Domestic",
            GroupLabel::Outdoor => "Outdoor",
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let group = match key.as_str() {
            "animal" | "animals" => GroupLabel::Animal,
            "bird" | "birds" => GroupLabel::Birds,
            "nature" | "natural" | "naturalsoundscapes" => GroupLabel::Nature,
            "human" => GroupLabel::Human,
            "machine" | "machinesounds" => GroupLabel::MachineSounds,
            "domestic" | "domesticsounds" => GroupLabel::Domestic,
            "outdoor" | "outdoornoises" => GroupLabel::Outdoor,
            _ => return Err(Error::UnknownGroup(s.to_string())),
        };
        Ok(group)
    }
}

/// Group membership as listed in the group table, by display name.
const GROUP_TABLE: [(GroupLabel, &[&str]); 7] = [
    (
        GroupLabel::Animal,
        &["Dog", "Sheep", "Pig", "Cow", "Frog", "Cat", "Insects(flying)", "Crickets"],
    ),
    (GroupLabel::Birds, &["Chirping Birds", "Rooster", "Crow", "Hen"]),
    (
        GroupLabel::Nature,
        &["Rain", "Sea Waves", "Crackling Fire", "Wind", "Pouring water", "Water drops", "Thunderstorm"],
    ),
    (
        GroupLabel::Human,
        &[
            "Crying Baby",
            "Sneezing",
            "Clapping",
            "Breathing",
            "Coughing",
            "Footsteps",
            "Laughing",
            "Brushing teeth",
            "Snoring",
            "Drinking, sipping",
        ],
    ),
    (
        GroupLabel::MachineSounds,
        &["Mouse Click", "Keyboard Typing", "Washing Machine", "Vacuum cleaner"],
    ),
    (
        GroupLabel::Domestic,
        &["Door knock", "Toilet flush", "Clock alarm", "Door, wood creaks", "Can opening", "Clock tick", "Glass breaking"],
    ),
    (
        GroupLabel::Outdoor,
        &[
            "Helicopter",
            "Chainsaw",
            "Siren",
            "Car Horn",
            "Engine",
            "Train",
            "Church bells",
            "Airplane",
            "Fireworks",
            "Hand saw",
        ],
    ),
];

/// One row of the published train/validation/test distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedDistribution {
    /// `None` is the Level-1 row.
    pub group: Option<GroupLabel>,
    pub classes: usize,
    pub total: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

const fn row(group: Option<GroupLabel>, classes: usize, total: usize, train: usize, validation: usize, test: usize) -> PublishedDistribution {
    PublishedDistribution {
        group,
        classes,
        total,
        train,
        validation,
        test,
    }
}

/// Sample counts per classifier as published alongside the taxonomy.
pub const PUBLISHED_DISTRIBUTION: [PublishedDistribution; 8] = [
    row(None, 7, 2000, 1280, 320, 400),
    row(Some(GroupLabel::Animal), 8, 320, 205, 51, 64),
    row(Some(GroupLabel::Birds), 4, 160, 103, 25, 32),
    row(Some(GroupLabel::Nature), 7, 280, 180, 44, 56),
    row(Some(GroupLabel::Human), 10, 400, 256, 64, 80),
    row(Some(GroupLabel::MachineSounds), 4, 160, 103, 25, 32),
    row(Some(GroupLabel::Domestic), 8, 320, 205, 51, 64),
    row(Some(GroupLabel::Outdoor), 10, 400, 256, 64, 80),
];

/// Clips per category in ESC-50.
pub const CLIPS_PER_CATEGORY: usize = 40;

/// Lowercases, trims and joins words with underscores (`"Sea Waves"` -> `"sea_waves"`).
pub fn normalize_category(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub category: String,
    pub group: GroupLabel,
}

/// Category -> group mapping with a stable category order inside each group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TaxonomyEntry>", into = "Vec<TaxonomyEntry>")]
pub struct Taxonomy {
    groups: BTreeMap<GroupLabel, Vec<String>>,
    index: HashMap<String, (GroupLabel, usize)>,
}

impl Taxonomy {
    /// Builds from `(category, group)` pairs; categories keep their first-seen order.
    pub fn from_entries(entries: impl IntoIterator<Item = TaxonomyEntry>) -> Result<Self> {
        let mut groups: BTreeMap<GroupLabel, Vec<String>> =
            GroupLabel::ALL.iter().map(|&g| (g, Vec::new())).collect();
        let mut index = HashMap::new();
        for entry in entries {
            let category = normalize_category(&entry.category);
            if category.is_empty() {
                return Err(Error::Config("empty category name in taxonomy".into()));
            }
            let members = groups.get_mut(&entry.group).expect("all groups present");
            if index.insert(category.clone(), (entry.group, members.len())).is_some() {
                return Err(Error::Config(format!("category '{category}' listed twice")));
            }
            members.push(category);
        }
        Ok(Self { groups, index })
    }

    /// The built-in seven-group taxonomy over all 50 ESC-50 categories.
    pub fn esc50() -> Self {
        Self::from_display_table(CATEGORY_NAMES_CSV).expect("shipped category table is valid")
    }

    /// Builds the built-in grouping, resolving display names through a
    /// `display_name,category` CSV.
    pub fn from_display_table(names_csv: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(names_csv.as_bytes());
        let mut names = HashMap::new();
        for row in reader.records() {
            let row = row?;
            let (Some(display), Some(category)) = (row.get(0), row.get(1)) else {
                return Err(Error::Config("category name table needs two columns".into()));
            };
            names.insert(display.trim().to_string(), category.trim().to_string());
        }
        let mut entries = Vec::new();
        for (group, displays) in GROUP_TABLE {
            for display in displays {
                let category = names
                    .get(*display)
                    .ok_or_else(|| Error::Config(format!("no ESC-50 label for '{display}'")))?;
                entries.push(TaxonomyEntry {
                    category: category.clone(),
                    group,
                });
            }
        }
        Self::from_entries(entries)
    }

    /// Parses a `category,group` override file.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for row in reader.records() {
            let row = row?;
            let (Some(category), Some(group)) = (row.get(0), row.get(1)) else {
                return Err(Error::Config("taxonomy file needs 'category,group' columns".into()));
            };
            entries.push(TaxonomyEntry {
                category: category.to_string(),
                group: group.parse()?,
            });
        }
        Self::from_entries(entries)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,group\n");
        for e in self.entries() {
            out.push_str(&format!("{},{}\n", e.category, e.group));
        }
        out
    }

    pub fn entries(&self) -> Vec<TaxonomyEntry> {
        self.groups
            .iter()
            .flat_map(|(&group, cats)| {
                cats.iter().map(move |c| TaxonomyEntry {
                    category: c.clone(),
                    group,
                })
            })
            .collect()
    }

    pub fn group_of(&self, category: &str) -> Result<GroupLabel> {
        self.locate(category).map(|(g, _)| g)
    }

    /// Group and position of `category` within its group.
    pub fn locate(&self, category: &str) -> Result<(GroupLabel, usize)> {
        let key = normalize_category(category);
        self.index
            .get(&key)
            .copied()
            .ok_or(Error::UnknownCategory(key))
    }

    pub fn categories(&self, group: GroupLabel) -> &[String] {
        &self.groups[&group]
    }

    pub fn group_sizes(&self) -> [usize; 7] {
        GroupLabel::ALL.map(|g| self.groups[&g].len())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Disagreements between this taxonomy (at 40 clips per category) and the published
    /// per-group class and sample counts.
    pub fn reference_warnings(&self) -> Vec<String> {
        PUBLISHED_DISTRIBUTION
            .iter()
            .filter_map(|row| {
                let group = row.group?;
                let classes = self.categories(group).len();
                (classes != row.classes).then(|| {
                    format!(
                        "{group}: published distribution lists {} classes / {} samples, \
                         but the taxonomy maps {classes} categories ({} samples)",
                        row.classes,
                        row.total,
                        classes * CLIPS_PER_CATEGORY
                    )
                })
            })
            .collect()
    }
}

impl TryFrom<Vec<TaxonomyEntry>> for Taxonomy {
    type Error = Error;

    fn try_from(entries: Vec<TaxonomyEntry>) -> Result<Self> {
        Self::from_entries(entries)
    }
}

impl From<Taxonomy> for Vec<TaxonomyEntry> {
    fn from(t: Taxonomy) -> Self {
        t.entries()
    }
}
