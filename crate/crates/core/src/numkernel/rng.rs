//! Seeded pseudo-random generator.
//!
//! xoshiro256** (Blackman & Vigna) with its state expanded from a 64-bit seed
//! by SplitMix64. Both are written out here so streams are identical on every
//! platform and independent of any crate version.

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::scalar::Real;

/// One SplitMix64 step; also used to derive independent child seeds.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream index into a new seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut s = base ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut s);
    splitmix64(&mut s)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    seed: u64,
    s: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { seed, s }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A generator for an independent sub-stream.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by Lemire's multiply-and-reject.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, returned in ascending order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}

/// i.i.d. uniform matrix entries in `[lo, hi)`.
pub fn seeded_uniform<S: Real>(
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    rng: &mut Rng,
) -> Result<Matrix<S>> {
    if lo.is_nan() || hi.is_nan() || lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::arg(format!(
            "uniform bounds require lo < hi, got [{lo}, {hi})"
        )));
    }
    let (slo, shi) = (S::lit(lo), S::lit(hi));
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        let v = S::lit(lo + (hi - lo) * rng.next_f64());
        if v >= shi || v < slo {
            slo
        } else {
            v
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        // SplitMix64 from 1234567, published reference outputs.
        let mut s = 1234567u64;
        assert_eq!(splitmix64(&mut s), 6457827717110365317);
        assert_eq!(splitmix64(&mut s), 3203168211198807973);
        let a: Vec<u64> = (0..4)
            .map({
                let mut r = Rng::new(7);
                move |_| r.next_u64()
            })
            .collect();
        let b: Vec<u64> = (0..4)
            .map({
                let mut r = Rng::new(7);
                move |_| r.next_u64()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn determinism_and_range() {
        let a: Matrix<f64> = seeded_uniform(7, 9, -1.0, 1.0, &mut Rng::new(3)).unwrap();
        let b: Matrix<f64> = seeded_uniform(7, 9, -1.0, 1.0, &mut Rng::new(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&x| (-1.0..1.0).contains(&x)));
    }

    #[test]
    fn mean_of_many_draws() {
        // sd of U[-1,1) is 1/sqrt(3); 1e5 draws give a standard error of ~0.0018.
        let m: Matrix<f64> = seeded_uniform(1000, 100, -1.0, 1.0, &mut Rng::new(11)).unwrap();
        let mean = m.sum() / m.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn degenerate_bounds() {
        assert!(seeded_uniform::<f64>(2, 2, 1.0, 1.0, &mut Rng::new(0)).is_err());
        assert!(seeded_uniform::<f64>(2, 2, 2.0, 1.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let mut r = Rng::new(5);
        let mut counts = [0usize; 6];
        for _ in 0..60_000 {
            counts[r.below(6)] += 1;
        }
        for c in counts {
            assert!((9_400..10_600).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn sample_indices_distinct_sorted() {
        let mut r = Rng::new(9);
        let s = r.sample_indices(100, 40);
        assert_eq!(s.len(), 40);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r.sample_indices(5, 10), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
    }
}
