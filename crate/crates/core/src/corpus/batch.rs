use std::collections::BTreeMap;

use crate::corpus::EncodedReview;
use crate::error::{Error, Result};
use crate::numkernel::Rng;

/// A `B × width` window of token ids, one row per review.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceBatch {
    /// Row-major `rows × width` ids.
    pub token_ids: Vec<u32>,
    pub rows: usize,
    pub width: usize,
    pub labels: Vec<usize>,
    /// Which slice of the reviews this is, starting at 0.
    pub slice_index: usize,
    pub num_slices: usize,
    pub is_final_slice: bool,
    /// Positions of the rows' reviews in the encoded set.
    pub review_indices: Vec<usize>,
}

impl SliceBatch {
    #[inline]
    pub fn token(&self, row: usize, step: usize) -> u32 {
        self.token_ids[row * self.width + step]
    }

    /// Ids at `step` for every row.
    pub fn column(&self, step: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.token(r, step)).collect()
    }
}

/// Reviews of equal length processed together for all their slices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReviewBatch {
    pub review_indices: Vec<usize>,
    pub labels: Vec<usize>,
    /// Row-major `rows × len` ids.
    pub ids: Vec<u32>,
    pub len: usize,
}

impl ReviewBatch {
    pub fn from_reviews(set: &[EncodedReview], indices: Vec<usize>) -> Result<Self> {
        let len = indices.first().map_or(0, |&i| set[i].len());
        let mut ids = Vec::with_capacity(len * indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in &indices {
            if set[i].len() != len {
                return Err(Error::arg("reviews in one batch must have equal length"));
            }
            ids.extend_from_slice(&set[i].ids);
            labels.push(set[i].label);
        }
        Ok(ReviewBatch {
            review_indices: indices,
            labels,
            ids,
            len,
        })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    /// Consecutive `steps`-wide windows; the last one is shorter when
    /// `steps` does not divide the length.
    pub fn slices(&self, steps: usize) -> Vec<SliceBatch> {
        assert!(steps > 0, "steps must be positive");
        let num_slices = self.len.div_ceil(steps);
        let rows = self.rows();
        (0..num_slices)
            .map(|s| {
                let start = s * steps;
                let end = (start + steps).min(self.len);
                let width = end - start;
                let mut token_ids = Vec::with_capacity(rows * width);
                for r in 0..rows {
                    token_ids
                        .extend_from_slice(&self.ids[r * self.len + start..r * self.len + end]);
                }
                SliceBatch {
                    token_ids,
                    rows,
                    width,
                    labels: self.labels.clone(),
                    slice_index: s,
                    num_slices,
                    is_final_slice: s + 1 == num_slices,
                    review_indices: self.review_indices.clone(),
                }
            })
            .collect()
    }
}

/// Shuffles the set and groups it into batches of at most `batch_size`
/// equal-length reviews. Batch order is shuffled as well.
pub fn plan_epoch(
    set: &[EncodedReview],
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<ReviewBatch>> {
    if batch_size == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    rng.shuffle(&mut order);
    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in order {
        by_len.entry(set[i].len()).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in by_len.into_values() {
        for chunk in members.chunks(batch_size) {
            out.push(ReviewBatch::from_reviews(set, chunk.to_vec())?);
        }
    }
    if out.len() > 1 {
        rng.shuffle(&mut out);
    }
    Ok(out)
}

/// Fixed-order batches for evaluation: reviews grouped by length, input order
/// kept within each group.
pub fn sequential_batches(set: &[EncodedReview], batch_size: usize) -> Result<Vec<ReviewBatch>> {
    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in set.iter().enumerate() {
        by_len.entry(r.len()).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in by_len.into_values() {
        for chunk in members.chunks(batch_size.max(1)) {
            out.push(ReviewBatch::from_reviews(set, chunk.to_vec())?);
        }
    }
    Ok(out)
}

/// One epoch of slice batches: every batch yields all of its slices, in
/// order, before the next batch starts.
pub fn batches(
    set: &[EncodedReview],
    batch_size: usize,
    steps: usize,
    rng: &mut Rng,
) -> Result<Vec<SliceBatch>> {
    if steps == 0 {
        return Err(Error::arg("steps must be positive"));
    }
    Ok(plan_epoch(set, batch_size, rng)?
        .iter()
        .flat_map(|b| b.slices(steps))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::EOS_ID;

    fn review(label: usize, seed: u32) -> EncodedReview {
        let mut ids: Vec<u32> = (0..87).map(|i| 3 + (i * 7 + seed) % 50).collect();
        ids.push(EOS_ID);
        EncodedReview::from_ids(ids, label)
    }

    #[test]
    fn eleven_slices_ending_in_eos() {
        let set = vec![review(1, 0)];
        let s = batches(&set, 4, 8, &mut Rng::new(0)).unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(
            (0..11).collect::<Vec<_>>(),
            s.iter().map(|b| b.slice_index).collect::<Vec<_>>()
        );
        assert!(s[10].is_final_slice && !s[9].is_final_slice);
        assert_eq!(s[10].token(0, 7), EOS_ID);
    }

    #[test]
    fn batch_sizes() {
        let set: Vec<_> = (0..3).map(|i| review(0, i)).collect();
        let plan = plan_epoch(&set, 2, &mut Rng::new(3)).unwrap();
        let mut sizes: Vec<usize> = plan.iter().map(ReviewBatch::rows).collect();
        sizes.sort();
        assert_eq!(sizes, [1, 2]);
    }

    #[test]
    fn slices_partition_each_review() {
        let set: Vec<_> = (0..5).map(|i| review(i as usize % 2, i)).collect();
        let slices = batches(&set, 2, 8, &mut Rng::new(9)).unwrap();
        let mut rebuilt: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for s in &slices {
            for (r, &ri) in s.review_indices.iter().enumerate() {
                rebuilt
                    .entry(ri)
                    .or_default()
                    .extend_from_slice(&s.token_ids[r * s.width..(r + 1) * s.width]);
            }
        }
        assert_eq!(rebuilt.len(), 5);
        for (i, ids) in rebuilt {
            assert_eq!(ids, set[i].ids);
        }
    }

    #[test]
    fn ragged_lengths_are_grouped() {
        let mut set = vec![review(0, 0), review(1, 1)];
        set.push(EncodedReview::from_ids(vec![5, 6, 7, EOS_ID], 2));
        let plan = plan_epoch(&set, 8, &mut Rng::new(2)).unwrap();
        assert_eq!(plan.len(), 2);
        let short = plan.iter().find(|b| b.len == 4).unwrap();
        let s = short.slices(3);
        assert_eq!(s.iter().map(|b| b.width).collect::<Vec<_>>(), [3, 1]);
    }
}
