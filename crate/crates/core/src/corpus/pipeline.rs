use crate::corpus::{
    build_vocab, class_histogram, encode_pad, encode_unpadded, filter_by_length, split, tokenize,
    ClassHistogram, PreparedData, PreparedSet, Resample, Review, Vocab,
};
use crate::error::Result;
use crate::numkernel::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct PrepareOptions {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub resample: Resample,
    pub max_len: usize,
    pub padded: bool,
    pub min_freq: usize,
    pub ratios: [f64; 3],
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            min_tokens: 75,
            max_tokens: 87,
            resample: Resample::None,
            max_len: 88,
            padded: true,
            min_freq: 1,
            ratios: [0.8, 0.1, 0.1],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub data: PreparedData,
    /// Counts after length filtering, before resampling.
    pub filtered: ClassHistogram,
    pub resampled: ClassHistogram,
}

/// Filter → resample → stratified split → vocabulary from train → encode.
pub fn prepare(reviews: &[Review], opts: &PrepareOptions, rng: &mut Rng) -> Result<Prepared> {
    let filtered = filter_by_length(reviews, opts.min_tokens, opts.max_tokens)?;
    let filtered_hist = class_histogram(&filtered);
    let resampled = opts.resample.apply(&filtered, &mut rng.fork())?;
    let resampled_hist = class_histogram(&resampled);
    let parts = split(&resampled, Review::class, opts.ratios, &mut rng.fork())?;
    let vocab = build_vocab(parts.train.iter().map(|r| tokenize(&r.text)), opts.min_freq)?;
    let classes = opts.resample.num_classes();
    let encode = |rs: &[Review], vocab: &Vocab| -> Result<PreparedSet> {
        let reviews = rs
            .iter()
            .map(|r| {
                if opts.padded {
                    encode_pad(r, vocab, opts.max_len)
                } else {
                    Ok(encode_unpadded(r, vocab))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedSet {
            classes,
            padded: opts.padded,
            max_len: opts.max_len,
            reviews,
        })
    };
    let data = PreparedData {
        train: encode(&parts.train, &vocab)?,
        val: encode(&parts.val, &vocab)?,
        test: encode(&parts.test, &vocab)?,
        vocab,
    };
    Ok(Prepared {
        data,
        filtered: filtered_hist,
        resampled: resampled_hist,
    })
}
