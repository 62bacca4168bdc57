//! Needleman-Wunsch global sequence alignment.
//!
//! The score matrix fills by anti-diagonal wavefronts (cells within a
//! diagonal are independent and split across workers), then the optimal
//! alignment is traced backward from the bottom-right corner. Traceback ties
//! resolve diagonal, then up, then left — a fixed contract shared with the
//! sequential reference.

use std::sync::atomic::{AtomicI32, Ordering};
use std::sync::Barrier;

use crate::error::{Error, Result};
use crate::parallel::join_workers;
use crate::rng::CounterRng;

/// Symmetric substitution scores over a small alphabet.
#[derive(Debug, Clone)]
pub struct SimilarityTable {
    pub alphabet: usize,
    pub scores: Vec<i32>,
}

impl SimilarityTable {
    pub fn match_mismatch(alphabet: usize, matching: i32, mismatching: i32) -> SimilarityTable {
        let mut scores = vec![mismatching; alphabet * alphabet];
        for s in 0..alphabet {
            scores[s * alphabet + s] = matching;
        }
        SimilarityTable { alphabet, scores }
    }

    #[inline]
    pub fn score(&self, a: u8, b: u8) -> i32 {
        self.scores[a as usize * self.alphabet + b as usize]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.alphabet).all(|i| {
            (0..self.alphabet)
                .all(|j| self.scores[i * self.alphabet + j] == self.scores[j * self.alphabet + i])
        })
    }
}

#[derive(Debug, Clone)]
pub struct SequencePair {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub similarity: SimilarityTable,
    pub gap_penalty: i32,
}

impl SequencePair {
    pub fn random(
        len_a: usize,
        len_b: usize,
        alphabet: usize,
        matching: i32,
        mismatching: i32,
        gap_penalty: i32,
        rng: &CounterRng,
    ) -> SequencePair {
        let a = (0..len_a)
            .map(|i| (rng.at(i as u64) % alphabet as u64) as u8)
            .collect();
        let b = (0..len_b)
            .map(|i| (rng.at((len_a + i) as u64) % alphabet as u64) as u8)
            .collect();
        SequencePair {
            a,
            b,
            similarity: SimilarityTable::match_mismatch(alphabet, matching, mismatching),
            gap_penalty,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err(Error::InvalidInput("empty sequence".to_string()));
        }
        if !self.similarity.is_symmetric() {
            return Err(Error::InvalidInput(
                "similarity table not symmetric".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    /// Consume one symbol of each sequence (match or substitution).
    Both,
    /// Gap in `a`: consume one symbol of `b`.
    GapA,
    /// Gap in `b`: consume one symbol of `a`.
    GapB,
}

fn traceback(h: &dyn Fn(usize, usize) -> i32, pair: &SequencePair) -> Vec<AlignOp> {
    let (mut i, mut j) = (pair.a.len(), pair.b.len());
    let gap = pair.gap_penalty;
    let mut ops = Vec::with_capacity(i + j);
    while i > 0 || j > 0 {
        if i > 0
            && j > 0
            && h(i, j) == h(i - 1, j - 1) + pair.similarity.score(pair.a[i - 1], pair.b[j - 1])
        {
            ops.push(AlignOp::Both);
            i -= 1;
            j -= 1;
        } else if i > 0 && h(i, j) == h(i - 1, j) + gap {
            ops.push(AlignOp::GapB);
            i -= 1;
        } else {
            debug_assert!(j > 0 && h(i, j) == h(i, j - 1) + gap);
            ops.push(AlignOp::GapA);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Wavefront-parallel fill plus traceback; returns the optimal score and the
/// alignment operations.
pub fn needleman_wunsch(pair: &SequencePair, workers: usize) -> Result<(i32, Vec<AlignOp>)> {
    pair.validate()?;
    let (la, lb) = (pair.a.len(), pair.b.len());
    let cols = lb + 1;
    let gap = pair.gap_penalty;
    let matrix: Vec<AtomicI32> = (0..(la + 1) * cols).map(|_| AtomicI32::new(0)).collect();
    for i in 0..=la {
        matrix[i * cols].store(i as i32 * gap, Ordering::Relaxed);
    }
    for j in 0..=lb {
        matrix[j].store(j as i32 * gap, Ordering::Relaxed);
    }
    let workers = workers.clamp(1, la.min(lb));
    let barrier = Barrier::new(workers);
    join_workers(workers, |lane| {
        for d in 2..=(la + lb) {
            let i_lo = 1.max(d.saturating_sub(lb));
            let i_hi = la.min(d - 1); // inclusive
            if i_lo <= i_hi {
                let span = i_hi - i_lo + 1;
                let chunk = span.div_ceil(workers);
                let start = i_lo + lane * chunk;
                let end = (start + chunk).min(i_hi + 1);
                for i in start..end {
                    let j = d - i;
                    let diag = matrix[(i - 1) * cols + (j - 1)].load(Ordering::Relaxed)
                        + pair.similarity.score(pair.a[i - 1], pair.b[j - 1]);
                    let up = matrix[(i - 1) * cols + j].load(Ordering::Relaxed) + gap;
                    let left = matrix[i * cols + (j - 1)].load(Ordering::Relaxed) + gap;
                    matrix[i * cols + j].store(diag.max(up).max(left), Ordering::Relaxed);
                }
            }
            barrier.wait();
        }
    });
    let h = |i: usize, j: usize| matrix[i * cols + j].load(Ordering::Relaxed);
    let score = h(la, lb);
    let ops = traceback(&h, pair);
    Ok((score, ops))
}

/// Row-by-row sequential reference.
pub fn needleman_wunsch_sequential(pair: &SequencePair) -> Result<(i32, Vec<AlignOp>)> {
    pair.validate()?;
    let (la, lb) = (pair.a.len(), pair.b.len());
    let cols = lb + 1;
    let gap = pair.gap_penalty;
    let mut matrix = vec![0i32; (la + 1) * cols];
    for (i, slot) in matrix.iter_mut().step_by(cols).enumerate() {
        *slot = i as i32 * gap;
    }
    for (j, slot) in matrix[..cols].iter_mut().enumerate() {
        *slot = j as i32 * gap;
    }
    for i in 1..=la {
        for j in 1..=lb {
            let diag = matrix[(i - 1) * cols + (j - 1)]
                + pair.similarity.score(pair.a[i - 1], pair.b[j - 1]);
            let up = matrix[(i - 1) * cols + j] + gap;
            let left = matrix[i * cols + (j - 1)] + gap;
            matrix[i * cols + j] = diag.max(up).max(left);
        }
    }
    let h = |i: usize, j: usize| matrix[i * cols + j];
    let score = h(la, lb);
    let ops = traceback(&h, pair);
    Ok((score, ops))
}

/// Recomputes an alignment's score and checks it consumes both sequences —
/// an implementation-independent validity check.
pub fn alignment_score(pair: &SequencePair, ops: &[AlignOp]) -> Result<i32> {
    let (mut i, mut j) = (0usize, 0usize);
    let mut score = 0i32;
    for op in ops {
        match op {
            AlignOp::Both => {
                score += pair.similarity.score(pair.a[i], pair.b[j]);
                i += 1;
                j += 1;
            }
            AlignOp::GapB => {
                score += pair.gap_penalty;
                i += 1;
            }
            AlignOp::GapA => {
                score += pair.gap_penalty;
                j += 1;
            }
        }
    }
    if i != pair.a.len() || j != pair.b.len() {
        return Err(Error::InvalidInput(
            "alignment does not consume both sequences".to_string(),
        ));
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_pair(a: &[u8], b: &[u8]) -> SequencePair {
        SequencePair {
            a: a.to_vec(),
            b: b.to_vec(),
            similarity: SimilarityTable::match_mismatch(4, 1, -1),
            gap_penalty: -1,
        }
    }

    /// Exhaustive alignment enumeration, the oracle for short sequences.
    fn brute_force(pair: &SequencePair, i: usize, j: usize) -> i32 {
        if i == pair.a.len() && j == pair.b.len() {
            return 0;
        }
        let mut best = i32::MIN;
        if i < pair.a.len() && j < pair.b.len() {
            best = best
                .max(pair.similarity.score(pair.a[i], pair.b[j]) + brute_force(pair, i + 1, j + 1));
        }
        if i < pair.a.len() {
            best = best.max(pair.gap_penalty + brute_force(pair, i + 1, j));
        }
        if j < pair.b.len() {
            best = best.max(pair.gap_penalty + brute_force(pair, i, j + 1));
        }
        best
    }

    #[test]
    fn identical_sequences_align_without_gaps() {
        let pair = simple_pair(&[0, 1, 2, 3, 1], &[0, 1, 2, 3, 1]);
        let (score, ops) = needleman_wunsch(&pair, 2).unwrap();
        assert_eq!(score, 5);
        assert!(ops.iter().all(|op| *op == AlignOp::Both));
    }

    #[test]
    fn single_mismatch_beats_two_gaps() {
        // "A" vs "G": substitution scores -1, two gaps would score -2.
        let pair = simple_pair(&[0], &[2]);
        let (score, ops) = needleman_wunsch(&pair, 1).unwrap();
        assert_eq!(score, -1);
        assert_eq!(ops, vec![AlignOp::Both]);
    }

    #[test]
    fn random_length_eight_pairs_match_brute_force() {
        for seed in 0..6 {
            let rng = CounterRng::new(2, "nw-test").split(seed);
            let pair = SequencePair::random(8, 8, 4, 1, -1, -1, &rng);
            let expected = brute_force(&pair, 0, 0);
            let (score, ops) = needleman_wunsch(&pair, 3).unwrap();
            assert_eq!(score, expected, "seed {seed}");
            assert_eq!(alignment_score(&pair, &ops).unwrap(), score);
        }
    }

    #[test]
    fn score_invariant_under_swapping_sequences() {
        let rng = CounterRng::new(4, "nw-test");
        let pair = SequencePair::random(30, 22, 6, 2, -1, -2, &rng);
        let swapped = SequencePair {
            a: pair.b.clone(),
            b: pair.a.clone(),
            similarity: pair.similarity.clone(),
            gap_penalty: pair.gap_penalty,
        };
        let (s1, _) = needleman_wunsch(&pair, 2).unwrap();
        let (s2, _) = needleman_wunsch(&swapped, 2).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn wavefront_matches_sequential_reference() {
        let rng = CounterRng::new(6, "nw-test");
        let pair = SequencePair::random(120, 97, 24, 1, -1, -1, &rng);
        let (ps, pops) = needleman_wunsch(&pair, 4).unwrap();
        let (ss, sops) = needleman_wunsch_sequential(&pair).unwrap();
        assert_eq!(ps, ss);
        assert_eq!(pops, sops);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let pair = simple_pair(&[], &[1]);
        assert!(needleman_wunsch(&pair, 1).is_err());
    }
}
