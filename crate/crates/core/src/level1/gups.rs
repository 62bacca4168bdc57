//! Random-access table updates (GUPS).
//!
//! The update stream is a counter-based random sequence; update u applies
//! `table[r(u) mod size] ^= r(u)`. XOR commutes, so the final table is
//! independent of how the stream is split across workers, and a sequential
//! replay of the same stream is an exact oracle.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::parallel::par_ranges;
use crate::rng::CounterRng;

/// `table[i] = i`, the conventional starting state.
pub fn init_table(table_log2: u32) -> Vec<AtomicU64> {
    (0..(1u64 << table_log2)).map(AtomicU64::new).collect()
}

pub fn reset_table(table: &[AtomicU64]) {
    for (i, word) in table.iter().enumerate() {
        word.store(i as u64, Ordering::Relaxed);
    }
}

/// Applies `updates` XOR updates in parallel over disjoint chunks of the
/// random stream.
pub fn apply_updates(table: &[AtomicU64], rng: &CounterRng, updates: u64, workers: usize) {
    let mask = table.len() as u64 - 1;
    par_ranges(workers, updates as usize, |range| {
        for u in range {
            let r = rng.at(u as u64);
            table[(r & mask) as usize].fetch_xor(r, Ordering::Relaxed);
        }
    });
}

/// Sequential replay of the same update stream on a plain table.
pub fn replay_sequential(table_log2: u32, rng: &CounterRng, updates: u64) -> Vec<u64> {
    let size = 1usize << table_log2;
    let mask = size as u64 - 1;
    let mut table: Vec<u64> = (0..size as u64).collect();
    for u in 0..updates {
        let r = rng.at(u);
        table[(r & mask) as usize] ^= r;
    }
    table
}

pub fn snapshot(table: &[AtomicU64]) -> Vec<u64> {
    table.iter().map(|w| w.load(Ordering::Relaxed)).collect()
}
