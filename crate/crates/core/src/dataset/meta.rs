//! Parsing of the official `meta/esc50.csv` file.

use serde::{Deserialize, Serialize};

use super::taxonomy::{normalize_category, GroupLabel, Taxonomy};
use crate::{Error, Result};

/// One ESC-50 clip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscRecord {
    pub filename: String,
    pub fold: u8,
    pub target: u8,
    pub category: String,
    pub group: GroupLabel,
}

const REQUIRED: [&str; 4] = ["filename", "fold", "target", "category"];

/// Parses metadata rows and attaches each record's group. Columns other than
/// `filename,fold,target,category` are accepted and ignored.
pub fn parse_meta_csv(text: &str, taxonomy: &Taxonomy) -> Result<Vec<EscRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(REQUIRED) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Metadata {
                line: 1,
                reason: format!("missing column '{name}'"),
            })?;
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row?;
        let field = |k: usize| row.get(cols[k]).unwrap_or("");
        let bad = |reason: String| Error::Metadata { line, reason };

        let filename = field(0).to_string();
        if filename.is_empty() {
            return Err(bad("empty filename".into()));
        }
        let fold: u8 = field(1)
            .parse()
            .map_err(|_| bad(format!("fold '{}' is not an integer", field(1))))?;
        if !(1..=5).contains(&fold) {
            return Err(bad(format!("fold {fold} outside 1..=5")));
        }
        let target: i64 = field(2)
            .parse()
            .map_err(|_| bad(format!("target '{}' is not an integer", field(2))))?;
        if !(0..=49).contains(&target) {
            return Err(bad(format!("target {target} outside 0..=49")));
        }
        let category = normalize_category(field(3));
        if category.is_empty() {
            return Err(bad("empty category".into()));
        }
        let group = taxonomy.group_of(&category)?;
        records.push(EscRecord {
            filename,
            fold,
            target: target as u8,
            category,
            group,
        });
    }
    Ok(records)
}

/// Records in `group`, order preserved.
pub fn subset_for_group(records: &[EscRecord], group: GroupLabel) -> Vec<EscRecord> {
    records.iter().filter(|r| r.group == group).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "filename,fold,target,category,esc10,src_file,take\n";

    #[test]
    fn parses_official_rows() {
        let text = format!(
            "{HEADER}1-100032-A-0.wav,1,0,dog,True,100032,A\n1-100038-A-14.wav,1,14,chirping_birds,False,100038,A\n"
        );
        let recs = parse_meta_csv(&text, &Taxonomy::esc50()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].group, GroupLabel::Animal);
        assert_eq!(recs[1].category, "chirping_birds");
        assert_eq!(recs[1].group, GroupLabel::Birds);
        assert_eq!(recs[1].target, 14);
    }

    #[test]
    fn normalizes_display_spelling() {
        let text = format!("{HEADER}a.wav,2,11,Sea Waves,False,1,A\n");
        let recs = parse_meta_csv(&text, &Taxonomy::esc50()).unwrap();
        assert_eq!(recs[0].category, "sea_waves");
        assert_eq!(recs[0].group, GroupLabel::Nature);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_meta_csv(HEADER, &Taxonomy::esc50()).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_rows() {
        let t = Taxonomy::esc50();
        let out_of_range = format!("{HEADER}a.wav,1,50,dog,False,1,A\n");
        assert!(matches!(
            parse_meta_csv(&out_of_range, &t),
            Err(Error::Metadata { line: 2, .. })
        ));
        let unknown = format!("{HEADER}a.wav,1,3,kazoo,False,1,A\n");
        assert!(matches!(parse_meta_csv(&unknown, &t), Err(Error::UnknownCategory(_))));
        let missing = "filename,fold,category\na.wav,1,dog\n";
        assert!(matches!(
            parse_meta_csv(missing, &t),
            Err(Error::Metadata { line: 1, .. })
        ));
        let bad_fold = format!("{HEADER}a.wav,9,0,dog,False,1,A\n");
        assert!(parse_meta_csv(&bad_fold, &t).is_err());
    }

    #[test]
    fn subset_preserves_order() {
        let text = format!(
            "{HEADER}a.wav,1,0,dog,x,1,A\nb.wav,1,1,rooster,x,1,A\nc.wav,1,5,cat,x,1,A\n"
        );
        let recs = parse_meta_csv(&text, &Taxonomy::esc50()).unwrap();
        let animals = subset_for_group(&recs, GroupLabel::Animal);
        assert_eq!(
            animals.iter().map(|r| r.filename.as_str()).collect::<Vec<_>>(),
            ["a.wav", "c.wav"]
        );
        assert!(subset_for_group(&[], GroupLabel::Human).is_empty());
    }
}
