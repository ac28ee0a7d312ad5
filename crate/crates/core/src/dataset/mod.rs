//! ESC-50 metadata, the seven-group taxonomy and dataset splits.

mod meta;
mod split;
mod taxonomy;

pub use meta::{parse_meta_csv, subset_for_group, EscRecord};
pub use split::{split, split_sizes, Partition, SplitAssignment, SplitEntry, SplitLevel, SplitSet, SplitSizes};
pub use taxonomy::{
    normalize_category, GroupLabel, PublishedDistribution, Taxonomy, TaxonomyEntry, CATEGORY_NAMES_CSV,
    CLIPS_PER_CATEGORY, PUBLISHED_DISTRIBUTION,
};
