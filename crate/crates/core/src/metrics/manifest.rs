//! Dataset split manifests: per-split image counts by lesion category.

use super::annotations::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCounts {
    pub split: String,
    pub benign: u64,
    pub malignant: u64,
    pub without_lesion: u64,
}

impl SplitCounts {
    pub fn lesion_images(&self) -> u64 {
        self.benign + self.malignant
    }

    pub fn total(&self) -> u64 {
        self.lesion_images() + self.without_lesion
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub splits: Vec<SplitCounts>,
}

impl DatasetManifest {
    /// Reads `split,benign,malignant,none` rows; a leading header row is
    /// skipped.
    pub fn parse_csv(bytes: &[u8]) -> Result<Self, ParseError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(bytes);
        let mut splits = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| ParseError::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != 4 {
                return Err(ParseError::ColumnCount {
                    line,
                    expected: 4,
                    found: record.len(),
                });
            }
            if i == 0 && record[1].parse::<u64>().is_err() {
                continue;
            }
            let mut counts = [0u64; 3];
            for (k, field) in ["benign", "malignant", "none"].into_iter().enumerate() {
                counts[k] = record[k + 1].parse().map_err(|_| ParseError::BadField {
                    line,
                    field,
                    text: record[k + 1].to_string(),
                })?;
            }
            splits.push(SplitCounts {
                split: record[0].to_string(),
                benign: counts[0],
                malignant: counts[1],
                without_lesion: counts[2],
            });
        }
        Ok(Self { splits })
    }

    pub fn split(&self, name: &str) -> Option<&SplitCounts> {
        self.splits.iter().find(|s| s.split == name)
    }

    pub fn total(&self) -> u64 {
        self.splits.iter().map(SplitCounts::total).sum()
    }

    pub fn benign(&self) -> u64 {
        self.splits.iter().map(|s| s.benign).sum()
    }

    pub fn malignant(&self) -> u64 {
        self.splits.iter().map(|s| s.malignant).sum()
    }

    pub fn without_lesion(&self) -> u64 {
        self.splits.iter().map(|s| s.without_lesion).sum()
    }
}
