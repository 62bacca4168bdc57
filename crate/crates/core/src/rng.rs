//! Counter-based splittable pseudorandom generator.
//!
//! Every benchmark derives its stream from `(seed, benchmark name)`, and
//! parallel kernels index the stream positionally with [`CounterRng::at`], so
//! generated data is independent of worker count and scheduling order.

/// 64-bit finalizer with full avalanche (the splitmix64 mixer).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stateless-at-heart generator: the value at stream position `i` is a pure
/// function of `(key, i)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Derives a stream from a user seed and a label (benchmark name etc.).
    pub fn new(seed: u64, stream: &str) -> Self {
        Self::from_key(mix64(seed ^ crate::util::fnv1a64(stream.as_bytes())))
    }

    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// Derives an independent child stream; `tag` distinguishes siblings.
    pub fn split(&self, tag: u64) -> Self {
        Self::from_key(mix64(self.key ^ mix64(tag.wrapping_add(GAMMA))))
    }

    /// Value at absolute stream position `index` (does not advance).
    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)),
        )
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn next_f32(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
    }

    /// Uniform in `[0, bound)`.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        // 128-bit multiply keeps the bias negligible for any realistic bound.
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn fill_f64(&mut self, out: &mut [f64], lo: f64, hi: f64) {
        for v in out.iter_mut() {
            *v = lo + (hi - lo) * self.next_f64();
        }
    }

    pub fn fill_f32(&mut self, out: &mut [f32], lo: f32, hi: f32) {
        for v in out.iter_mut() {
            *v = lo + (hi - lo) * self.next_f32();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_is_pure_and_matches_next() {
        let mut rng = CounterRng::new(42, "gups");
        let probe = rng.clone();
        let seq: Vec<u64> = (0..8).map(|_| rng.next_u64()).collect();
        let idx: Vec<u64> = (0..8).map(|i| probe.at(i)).collect();
        assert_eq!(seq, idx);
    }

    #[test]
    fn streams_differ_by_label_and_seed() {
        let a = CounterRng::new(1, "gemm");
        let b = CounterRng::new(1, "sort");
        let c = CounterRng::new(2, "gemm");
        assert_ne!(a.at(0), b.at(0));
        assert_ne!(a.at(0), c.at(0));
    }

    #[test]
    fn split_gives_independent_children() {
        let root = CounterRng::new(7, "bfs");
        let c0 = root.split(0);
        let c1 = root.split(1);
        assert_ne!(c0.at(0), c1.at(0));
        assert_ne!(c0.at(0), root.at(0));
    }

    #[test]
    fn floats_land_in_unit_interval() {
        let mut rng = CounterRng::new(3, "x");
        for _ in 0..1000 {
            let f = rng.next_f64();
            assert!((0.0..1.0).contains(&f));
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = CounterRng::new(11, "shuffle");
        let mut v: Vec<u32> = (0..100).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
    }
}
