use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// One raw `(score, text)` record from the reviews CSV.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Review {
    pub id: String,
    /// Star rating in `1..=5`.
    pub score: u8,
    pub text: String,
}

impl Review {
    pub fn new(id: impl Into<String>, score: u8, text: impl Into<String>) -> Self {
        Review {
            id: id.into(),
            score,
            text: text.into(),
        }
    }

    /// Zero-based class index.
    pub fn class(&self) -> usize {
        usize::from(self.score) - 1
    }
}

/// Rows that could not be turned into a [`Review`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows_read: usize,
    /// `(1-based data row number, reason)`.
    pub skipped: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn rows_skipped(&self) -> usize {
        self.skipped.len()
    }
}

pub fn parse_reviews_csv(path: &Path) -> Result<(Vec<Review>, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reviews(file)
}

/// Parses RFC-4180 CSV with (case-insensitive) `Score` and `Text` columns.
/// An `Id` column is used when present, otherwise the row number.
pub fn parse_reviews<R: Read>(input: R) -> Result<(Vec<Review>, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("cannot read CSV header: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let score_col = find("score").ok_or_else(|| Error::Format("missing Score column".into()))?;
    let text_col = find("text").ok_or_else(|| Error::Format("missing Text column".into()))?;
    let id_col = find("id");

    let mut reviews = Vec::new();
    let mut report = IngestReport::default();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        report.rows_read += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.skipped.push((row, e.to_string()));
                continue;
            }
        };
        let (Some(score), Some(text)) = (record.get(score_col), record.get(text_col)) else {
            report
                .skipped
                .push((row, format!("only {} fields", record.len())));
            continue;
        };
        let score = match score.trim().parse::<u8>() {
            Ok(s) if (1..=5).contains(&s) => s,
            _ => {
                report.skipped.push((row, format!("bad score {score:?}")));
                continue;
            }
        };
        let id = id_col
            .and_then(|c| record.get(c))
            .map(str::to_owned)
            .unwrap_or_else(|| row.to_string());
        reviews.push(Review::new(id, score, text));
    }
    Ok((reviews, report))
}
