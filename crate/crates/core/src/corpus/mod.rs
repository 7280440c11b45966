//! Review ingestion, tokenization, length filtering, skew correction,
//! vocabulary, padding/EOS encoding, splitting and slice batching.

mod batch;
mod encode;
pub mod files;
mod pipeline;
mod resample;
mod review;
mod split;
mod synth;
mod tokenize;
pub mod vocab;

pub use batch::{batches, plan_epoch, sequential_batches, ReviewBatch, SliceBatch};
pub use encode::{decode, encode_pad, encode_unpadded, EncodedReview};
pub use files::{PreparedData, PreparedSet};
pub use pipeline::{prepare, PrepareOptions, Prepared};
pub use resample::{
    class_histogram, filter_by_length, resample_drop_top, resample_subsample, ClassHistogram,
    Resample,
};
pub use review::{parse_reviews, parse_reviews_csv, IngestReport, Review};
pub use split::{split, Split};
pub use synth::{synth_corpus, PlantSpec};
pub use tokenize::tokenize;
pub use vocab::{build_vocab, Vocab, EOS_ID, PAD_ID, UNK_ID};
