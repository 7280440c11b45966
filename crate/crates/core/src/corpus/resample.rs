use std::fmt;

use crate::corpus::{tokenize, Review};
use crate::error::{Error, Result};
use crate::numkernel::Rng;

/// Per-score review counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassHistogram {
    /// `counts[s - 1]` is the number of reviews with score `s`.
    pub counts: [usize; 5],
    pub total: usize,
}

impl ClassHistogram {
    pub fn count(&self, score: u8) -> usize {
        self.counts[usize::from(score) - 1]
    }

    /// Score with the most reviews (lowest score on ties).
    pub fn largest(&self) -> u8 {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best as u8 + 1
    }

    /// Score with the fewest reviews (lowest score on ties).
    pub fn smallest(&self) -> u8 {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c < self.counts[best] {
                best = i;
            }
        }
        best as u8 + 1
    }

    /// CSV with header `class,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, c));
        }
        out
    }
}

impl fmt::Display for ClassHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.counts.iter().enumerate() {
            write!(f, "{}:{} ", i + 1, c)?;
        }
        write!(f, "total:{}", self.total)
    }
}

pub fn class_histogram(reviews: &[Review]) -> ClassHistogram {
    let mut h = ClassHistogram::default();
    for r in reviews {
        h.counts[r.class()] += 1;
    }
    h.total = h.counts.iter().sum();
    h
}

/// Keeps reviews whose token count lies in `[min_len, max_len]`.
pub fn filter_by_length(reviews: &[Review], min_len: usize, max_len: usize) -> Result<Vec<Review>> {
    if min_len > max_len {
        return Err(Error::arg(format!(
            "length bounds ({min_len}, {max_len}) are inverted"
        )));
    }
    Ok(reviews
        .iter()
        .filter(|r| (min_len..=max_len).contains(&tokenize(&r.text).len()))
        .cloned()
        .collect())
}

/// Skew correction applied after length filtering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resample {
    None,
    /// Discard every score-5 review; the task becomes 4-class.
    DropTop,
    /// Cap scores 4 and 5 at `n_target` reviews each.
    Subsample {
        n_target: usize,
    },
}

impl Resample {
    pub fn num_classes(self) -> usize {
        match self {
            Resample::DropTop => 4,
            _ => 5,
        }
    }

    pub fn apply(self, reviews: &[Review], rng: &mut Rng) -> Result<Vec<Review>> {
        match self {
            Resample::None => Ok(reviews.to_vec()),
            Resample::DropTop => Ok(resample_drop_top(reviews)),
            Resample::Subsample { n_target } => resample_subsample(reviews, n_target, rng),
        }
    }
}

impl fmt::Display for Resample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resample::None => f.write_str("none"),
            Resample::DropTop => f.write_str("drop_top"),
            Resample::Subsample { n_target } => write!(f, "subsample({n_target})"),
        }
    }
}

pub fn resample_drop_top(reviews: &[Review]) -> Vec<Review> {
    reviews.iter().filter(|r| r.score != 5).cloned().collect()
}

/// Reduces scores 4 and 5 to `min(n_target, available)` reviews each, drawn
/// uniformly without replacement. Survivors keep their input order.
pub fn resample_subsample(
    reviews: &[Review],
    n_target: usize,
    rng: &mut Rng,
) -> Result<Vec<Review>> {
    if n_target == 0 {
        return Err(Error::arg("subsample target must be positive"));
    }
    let mut keep = vec![true; reviews.len()];
    for score in [4u8, 5] {
        let members: Vec<usize> = (0..reviews.len())
            .filter(|&i| reviews[i].score == score)
            .collect();
        if members.len() <= n_target {
            continue;
        }
        let chosen = rng.sample_indices(members.len(), n_target);
        let mut chosen = chosen.into_iter().peekable();
        for (j, &i) in members.iter().enumerate() {
            if chosen.peek() == Some(&j) {
                chosen.next();
            } else {
                keep[i] = false;
            }
        }
    }
    Ok(reviews
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(r, _)| r.clone())
        .collect())
}
