use crate::corpus::Review;
use crate::numkernel::Rng;

/// Shape of a synthetic corpus whose labels are recoverable from the text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantSpec {
    pub classes: usize,
    /// Number of distinct class-neutral filler words.
    pub filler_vocab: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// How many times the class token is planted in each review.
    pub plants_per_review: usize,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            classes: 5,
            filler_vocab: 200,
            min_tokens: 75,
            max_tokens: 87,
            plants_per_review: 30,
        }
    }
}

impl PlantSpec {
    /// The token that marks class `class` (zero-based).
    pub fn plant_token(class: usize) -> String {
        format!("plant{class}")
    }
}

/// `n_per_class` reviews per class of filler words with the class token planted
/// at random positions. Classes are interleaved in the output.
pub fn synth_corpus(n_per_class: usize, spec: &PlantSpec, rng: &mut Rng) -> Vec<Review> {
    assert!(n_per_class > 0, "n_per_class must be positive");
    assert!(spec.min_tokens <= spec.max_tokens && spec.plants_per_review <= spec.min_tokens);
    let mut out = Vec::with_capacity(n_per_class * spec.classes);
    for i in 0..n_per_class {
        for class in 0..spec.classes {
            let len = spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
            let mut tokens: Vec<String> = (0..len)
                .map(|_| format!("w{}", rng.below(spec.filler_vocab)))
                .collect();
            for pos in rng.sample_indices(len, spec.plants_per_review) {
                tokens[pos] = PlantSpec::plant_token(class);
            }
            out.push(Review::new(
                format!("synth-{class}-{i}"),
                class as u8 + 1,
                tokens.join(" "),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{class_histogram, tokenize};

    #[test]
    fn uniform_histogram() {
        let rs = synth_corpus(10, &PlantSpec::default(), &mut Rng::new(1));
        assert_eq!(rs.len(), 50);
        assert_eq!(class_histogram(&rs).counts, [10; 5]);
    }

    #[test]
    fn every_review_carries_its_plant() {
        let spec = PlantSpec::default();
        for r in synth_corpus(20, &spec, &mut Rng::new(2)) {
            let toks = tokenize(&r.text);
            assert!((75..=87).contains(&toks.len()));
            let plant = PlantSpec::plant_token(r.class());
            assert_eq!(
                toks.iter().filter(|t| **t == plant).count(),
                spec.plants_per_review
            );
            for other in (0..5).filter(|&c| c != r.class()) {
                assert!(!toks.contains(&PlantSpec::plant_token(other)));
            }
        }
    }

    #[test]
    fn deterministic() {
        let spec = PlantSpec::default();
        assert_eq!(
            synth_corpus(5, &spec, &mut Rng::new(3)),
            synth_corpus(5, &spec, &mut Rng::new(3))
        );
    }
}
