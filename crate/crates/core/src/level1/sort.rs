//! Stable LSD radix sort of key-value pairs (8-bit digits, 4 passes).
//!
//! Float keys are mapped through the order-preserving bijection to `u32`
//! (flip the sign bit for non-negatives, flip every bit for negatives), which
//! matches the IEEE total order: `-0.0` sorts strictly before `+0.0`.
//!
//! Parallelization uses per-block histograms with block offsets accumulated
//! in block order, so the output is stable and independent of worker count.

use crate::parallel::{par_map_blocks, SharedSlice};
use crate::rng::CounterRng;

const RADIX_BITS: u32 = 8;
const BUCKETS: usize = 1 << RADIX_BITS;
const PASSES: u32 = 32 / RADIX_BITS;
const BLOCK: usize = 1 << 15;

/// Keys with 32-bit payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValueArray {
    pub keys: Vec<f32>,
    pub values: Vec<u32>,
}

impl KeyValueArray {
    pub fn random(n: usize, rng: &mut CounterRng) -> KeyValueArray {
        let mut keys = vec![0.0f32; n];
        rng.fill_f32(&mut keys, -1000.0, 1000.0);
        // make the edge keys present in any sizable input
        if n >= 2 {
            keys[0] = 0.0;
            keys[1] = -0.0;
        }
        KeyValueArray {
            keys,
            values: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[inline]
pub fn float_to_ordered(f: f32) -> u32 {
    let bits = f.to_bits();
    if bits & 0x8000_0000 != 0 {
        !bits
    } else {
        bits ^ 0x8000_0000
    }
}

#[inline]
pub fn ordered_to_float(u: u32) -> f32 {
    if u & 0x8000_0000 != 0 {
        f32::from_bits(u ^ 0x8000_0000)
    } else {
        f32::from_bits(!u)
    }
}

/// One stable counting pass on `shift`-aligned digits.
fn radix_pass(
    src_keys: &[u32],
    src_vals: &[u32],
    dst_keys: &mut [u32],
    dst_vals: &mut [u32],
    shift: u32,
    workers: usize,
) {
    let n = src_keys.len();
    let mut hists = par_map_blocks(workers, n, BLOCK, |_, range| {
        let mut hist = vec![0u32; BUCKETS];
        for &k in &src_keys[range] {
            hist[((k >> shift) & 0xFF) as usize] += 1;
        }
        hist
    });
    // Exclusive global digit bases, then per-block starting offsets in block
    // order (this is what keeps the sort stable).
    let mut base = [0u32; BUCKETS];
    let mut sum = 0u32;
    for d in 0..BUCKETS {
        base[d] = sum;
        for hist in &hists {
            sum += hist[d];
        }
    }
    for d in 0..BUCKETS {
        let mut running = base[d];
        for hist in hists.iter_mut() {
            let count = hist[d];
            hist[d] = running;
            running += count;
        }
    }
    let keys_out = SharedSlice::new(dst_keys);
    let vals_out = SharedSlice::new(dst_vals);
    par_map_blocks(workers, n, BLOCK, |b, range| {
        let mut offsets = hists[b].clone();
        for i in range {
            let d = ((src_keys[i] >> shift) & 0xFF) as usize;
            let pos = offsets[d] as usize;
            offsets[d] += 1;
            // Disjoint by construction: every (block, digit) range is unique.
            unsafe {
                keys_out.set(pos, src_keys[i]);
                vals_out.set(pos, src_vals[i]);
            }
        }
    });
}

/// Sorts `u32` keys with payloads in place (4 stable passes).
pub fn radix_sort_u32(keys: &mut Vec<u32>, values: &mut Vec<u32>, workers: usize) {
    let n = keys.len();
    if n <= 1 {
        return;
    }
    let mut tmp_keys = vec![0u32; n];
    let mut tmp_vals = vec![0u32; n];
    for pass in 0..PASSES {
        radix_pass(
            keys,
            values,
            &mut tmp_keys,
            &mut tmp_vals,
            pass * RADIX_BITS,
            workers,
        );
        std::mem::swap(keys, &mut tmp_keys);
        std::mem::swap(values, &mut tmp_vals);
    }
}

/// Sorts float keys (with payloads) through the order-preserving transform.
pub fn radix_sort(kv: &KeyValueArray, workers: usize) -> KeyValueArray {
    let mut keys: Vec<u32> = kv.keys.iter().map(|&f| float_to_ordered(f)).collect();
    let mut values = kv.values.clone();
    radix_sort_u32(&mut keys, &mut values, workers);
    KeyValueArray {
        keys: keys.into_iter().map(ordered_to_float).collect(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Stable comparison sort on the IEEE total order — the oracle.
    fn oracle_sort(kv: &KeyValueArray) -> KeyValueArray {
        let mut pairs: Vec<(f32, u32)> = kv
            .keys
            .iter()
            .cloned()
            .zip(kv.values.iter().cloned())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        KeyValueArray {
            keys: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    fn bits(kv: &KeyValueArray) -> Vec<(u32, u32)> {
        kv.keys
            .iter()
            .map(|k| k.to_bits())
            .zip(kv.values.iter().cloned())
            .collect()
    }

    #[test]
    fn empty_array_stays_empty() {
        let kv = KeyValueArray {
            keys: vec![],
            values: vec![],
        };
        assert!(radix_sort(&kv, 2).is_empty());
    }

    #[test]
    fn sorted_input_is_unchanged() {
        let kv = KeyValueArray {
            keys: vec![-3.5, -0.0, 0.0, 1.0, 2.5],
            values: vec![0, 1, 2, 3, 4],
        };
        let sorted = radix_sort(&kv, 1);
        assert_eq!(bits(&sorted), bits(&kv));
    }

    #[test]
    fn ten_thousand_random_keys_match_stable_oracle() {
        let mut rng = CounterRng::new(11, "sort-test");
        let kv = KeyValueArray::random(10_000, &mut rng);
        let sorted = radix_sort(&kv, 4);
        let expected = oracle_sort(&kv);
        assert_eq!(bits(&sorted), bits(&expected));
    }

    #[test]
    fn negative_zero_sorts_before_positive_zero() {
        let kv = KeyValueArray {
            keys: vec![0.0, -0.0, 0.0, -0.0],
            values: vec![10, 11, 12, 13],
        };
        let sorted = radix_sort(&kv, 1);
        // total order: both -0.0 first (stable: 11 then 13), then +0.0 (10, 12)
        assert_eq!(sorted.values, vec![11, 13, 10, 12]);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let mut rng = CounterRng::new(13, "sort-test");
        let kv = KeyValueArray::random(50_000, &mut rng);
        assert_eq!(bits(&radix_sort(&kv, 1)), bits(&radix_sort(&kv, 5)));
    }

    #[test]
    fn transform_round_trips_all_bit_patterns() {
        for bits in [0u32, 1, 0x7F80_0000, 0x8000_0000, 0xFF80_0000, 0xDEAD_BEEF] {
            assert_eq!(
                ordered_to_float(float_to_ordered(f32::from_bits(bits))).to_bits(),
                bits
            );
        }
    }

    proptest! {
        #[test]
        fn output_is_a_sorted_stable_permutation(
            keys in proptest::collection::vec(-1e6f32..1e6f32, 0..400),
        ) {
            let kv = KeyValueArray {
                values: (0..keys.len() as u32).collect(),
                keys,
            };
            let sorted = radix_sort(&kv, 3);
            prop_assert_eq!(bits(&sorted), bits(&oracle_sort(&kv)));
            for w in sorted.keys.windows(2) {
                prop_assert!(w[0].total_cmp(&w[1]) != std::cmp::Ordering::Greater);
            }
        }
    }
}
