//! Prepared-dataset files.
//!
//! ```text
//! # slicernn-v1
//! # classes=5 padded=true max_len=88
//! <label>\t<id> <id> ... <id>
//! ```
//!
//! `label` is the zero-based class index. Further `# key=value` lines after
//! the version line are metadata.

use std::fs;
use std::path::Path;

use crate::corpus::vocab::FORMAT_MARKER;
use crate::corpus::{EncodedReview, Vocab};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedSet {
    pub classes: usize,
    pub padded: bool,
    pub max_len: usize,
    pub reviews: Vec<EncodedReview>,
}

impl PreparedSet {
    pub fn to_file_string(&self) -> String {
        let mut out = format!(
            "{FORMAT_MARKER}\n# classes={} padded={} max_len={}\n",
            self.classes, self.padded, self.max_len
        );
        for r in &self.reviews {
            out.push_str(&r.label.to_string());
            out.push('\t');
            let ids: Vec<String> = r.ids.iter().map(u32::to_string).collect();
            out.push_str(&ids.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_file_string(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l == FORMAT_MARKER => {}
            _ => {
                return Err(Error::Format(format!(
                    "prepared file must start with {FORMAT_MARKER:?}"
                )))
            }
        }
        let mut set = PreparedSet {
            classes: 0,
            padded: true,
            max_len: 0,
            reviews: Vec::new(),
        };
        let bad = |n: usize, what: &str| Error::Format(format!("line {}: {what}", n + 1));
        for (n, line) in lines {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else {
                        continue;
                    };
                    match k {
                        "classes" => set.classes = v.parse().map_err(|_| bad(n, "bad classes"))?,
                        "padded" => {
                            set.padded = v.parse().map_err(|_| bad(n, "bad padded flag"))?
                        }
                        "max_len" => set.max_len = v.parse().map_err(|_| bad(n, "bad max_len"))?,
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (label, ids) = line.split_once('\t').ok_or_else(|| bad(n, "missing tab"))?;
            let label: usize = label.parse().map_err(|_| bad(n, "bad label"))?;
            let ids = ids
                .split(' ')
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(n, "bad token id"))?;
            set.reviews.push(EncodedReview::from_ids(ids, label));
        }
        if set.classes == 0 {
            set.classes = set.reviews.iter().map(|r| r.label + 1).max().unwrap_or(0);
        }
        if let Some(r) = set.reviews.iter().find(|r| r.label >= set.classes) {
            return Err(Error::Format(format!(
                "label {} exceeds {} classes",
                r.label, set.classes
            )));
        }
        Ok(set)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_string(&s)
    }
}

/// File names inside a prepared-data directory.
pub mod layout {
    pub const TRAIN: &str = "train.txt";
    pub const VAL: &str = "val.txt";
    pub const TEST: &str = "test.txt";
    pub const VOCAB: &str = "vocab.txt";
    pub const HISTOGRAM: &str = "histogram.csv";
    pub const HISTOGRAM_RESAMPLED: &str = "histogram_resampled.csv";
}

/// A prepared-data directory loaded into memory.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub vocab: Vocab,
    pub train: PreparedSet,
    pub val: PreparedSet,
    pub test: PreparedSet,
}

impl PreparedData {
    pub fn load(dir: &Path) -> Result<Self> {
        let vocab_path = dir.join(layout::VOCAB);
        let vocab_text = fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let data = PreparedData {
            vocab: Vocab::from_file_string(&vocab_text)?,
            train: PreparedSet::read(&dir.join(layout::TRAIN))?,
            val: PreparedSet::read(&dir.join(layout::VAL))?,
            test: PreparedSet::read(&dir.join(layout::TEST))?,
        };
        let v = data.vocab.len() as u32;
        for set in [&data.train, &data.val, &data.test] {
            if set.reviews.iter().flat_map(|r| &r.ids).any(|&id| id >= v) {
                return Err(Error::Format("token id outside the vocabulary".into()));
            }
        }
        Ok(data)
    }

    /// Writes the vocabulary and the three splits into `dir`, creating it.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let vocab_path = dir.join(layout::VOCAB);
        fs::write(&vocab_path, self.vocab.to_file_string())
            .map_err(|e| Error::io(&vocab_path, e))?;
        self.train.write(&dir.join(layout::TRAIN))?;
        self.val.write(&dir.join(layout::VAL))?;
        self.test.write(&dir.join(layout::TEST))
    }

    pub fn classes(&self) -> usize {
        self.train.classes
    }

    pub fn padded(&self) -> bool {
        self.train.padded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let set = PreparedSet {
            classes: 4,
            padded: true,
            max_len: 4,
            reviews: vec![
                EncodedReview::from_ids(vec![0, 0, 5, 2], 3),
                EncodedReview::from_ids(vec![0, 7, 5, 2], 0),
            ],
        };
        let text = set.to_file_string();
        assert!(text.starts_with("# slicernn-v1\n"));
        assert!(text.contains("\n3\t0 0 5 2\n"));
        let back = PreparedSet::from_file_string(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.reviews[0].pad_count, 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PreparedSet::from_file_string("1\t0 2\n").is_err());
        assert!(PreparedSet::from_file_string("# slicernn-v1\n1 0 2\n").is_err());
        assert!(PreparedSet::from_file_string("# slicernn-v1\n# classes=2\n4\t0 2\n").is_err());
    }
}
