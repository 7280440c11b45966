use crate::corpus::vocab::{EOS_ID, PAD_ID};
use crate::corpus::{tokenize, Review, Vocab};
use crate::error::{Error, Result};

/// A review as token ids ending in EOS, optionally front-padded with PAD.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedReview {
    pub ids: Vec<u32>,
    /// Zero-based class index.
    pub label: usize,
    /// Number of leading PAD ids.
    pub pad_count: usize,
}

impl EncodedReview {
    /// Builds from raw ids, counting the leading PAD run.
    pub fn from_ids(ids: Vec<u32>, label: usize) -> Self {
        let pad_count = ids.iter().take_while(|&&id| id == PAD_ID).count();
        EncodedReview {
            ids,
            label,
            pad_count,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Content ids without padding or the trailing EOS.
    pub fn content(&self) -> &[u32] {
        let end = if self.ids.last() == Some(&EOS_ID) {
            self.ids.len() - 1
        } else {
            self.ids.len()
        };
        &self.ids[self.pad_count.min(end)..end]
    }
}

/// `[PAD × (max_len − n − 1)] ++ ids(tokens) ++ [EOS]`.
pub fn encode_pad(review: &Review, vocab: &Vocab, max_len: usize) -> Result<EncodedReview> {
    let tokens = tokenize(&review.text);
    if tokens.len() + 1 > max_len {
        return Err(Error::Length {
            tokens: tokens.len(),
            max_len,
        });
    }
    let pad_count = max_len - tokens.len() - 1;
    let mut ids = vec![PAD_ID; pad_count];
    ids.extend(tokens.iter().map(|t| vocab.id(t)));
    ids.push(EOS_ID);
    Ok(EncodedReview {
        ids,
        label: review.class(),
        pad_count,
    })
}

/// Natural-length encoding: token ids followed by EOS, no padding.
pub fn encode_unpadded(review: &Review, vocab: &Vocab) -> EncodedReview {
    let mut ids: Vec<u32> = tokenize(&review.text).iter().map(|t| vocab.id(t)).collect();
    ids.push(EOS_ID);
    EncodedReview {
        ids,
        label: review.class(),
        pad_count: 0,
    }
}

/// Tokens for the content ids (PAD and EOS stripped).
pub fn decode(encoded: &EncodedReview, vocab: &Vocab) -> Vec<String> {
    encoded
        .content()
        .iter()
        .map(|&id| vocab.token(id).unwrap_or("<unk>").to_owned())
        .collect()
}
