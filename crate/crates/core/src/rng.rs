//! Portable seeded randomness.
//!
//! Every random decision in the harness (split permutations, corruption
//! picks, mini-batch order, weight initialisation) draws from [`SplitMix64`]
//! so that a given seed produces the same indices on any platform and in any
//! reimplementation that follows the same recipe:
//!
//! * `next_u64`: the SplitMix64 step (golden-gamma increment, two xor-shift
//!   multiplies).
//! * `below(n)`: Lemire's multiply-high with rejection, unbiased.
//! * `shuffle`: Fisher-Yates from the last element down, `j = below(i + 1)`.
//! * `sample`: selection sampling; item `i` of `n` is taken iff
//!   `below(n - i) < k - taken`.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Shuffles only as far as needed so that `items[..k]` is a uniform
    /// random `k`-subset in random order.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        for i in 0..k.min(n) {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }

    /// Splits `items` into a uniform random `k`-subset and the rest, both
    /// in their original order. One draw per item, no shuffling.
    pub fn sample<T: Copy + Default>(&mut self, items: &[T], k: usize) -> (Vec<T>, Vec<T>) {
        let n = items.len();
        let k = k.min(n);
        // Branchless: every item is written to both buffers and only the
        // matching cursor advances. The spare slot absorbs the last write.
        let mut chosen = vec![T::default(); k + 1];
        let mut rest = vec![T::default(); n - k + 1];
        let (mut c, mut r) = (0usize, 0usize);
        for (i, &item) in items.iter().enumerate() {
            let take = ((self.below((n - i) as u64) as usize) < k - c) as usize;
            chosen[c] = item;
            rest[r] = item;
            c += take;
            r += 1 - take;
        }
        chosen.truncate(k);
        rest.truncate(n - k);
        (chosen, rest)
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed, e.g. one per run or per purpose.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(GOLDEN_GAMMA)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        // Published SplitMix64 outputs for seed 0.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(rng.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(rng.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut rng = SplitMix64::new(7);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            let v = rng.below(7) as usize;
            seen[v] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = SplitMix64::new(3);
        let mut v: Vec<usize> = (0..100).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }

    #[test]
    fn sample_is_ordered_and_uniform() {
        let items: Vec<usize> = (0..10).collect();
        let mut hits = [0usize; 10];
        for seed in 0..10_000 {
            let (chosen, rest) = SplitMix64::new(seed).sample(&items, 3);
            assert_eq!(chosen.len(), 3);
            assert_eq!(rest.len(), 7);
            assert!(chosen.windows(2).all(|w| w[0] < w[1]));
            assert!(rest.windows(2).all(|w| w[0] < w[1]));
            for c in chosen {
                hits[c] += 1;
            }
        }
        // Each item is chosen with probability 3/10.
        assert!(hits.iter().all(|&h| (2800..3200).contains(&h)), "{hits:?}");
        assert_eq!(SplitMix64::new(0).sample(&items, 20).0, items);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}
