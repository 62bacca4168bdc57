//! Worker-pool helpers for the compute regions.
//!
//! All helpers partition work deterministically. Where a kernel reduces
//! floating-point values, it does so over fixed-size blocks folded in block
//! order, so results are bit-identical for every worker count.

use std::ops::Range;
use std::thread;

/// Number of logical CPUs, used as the default worker count.
pub fn hardware_workers() -> usize {
    thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs `f(lane)` on `workers` scoped threads (inline when `workers == 1`).
pub fn join_workers<F>(workers: usize, f: F)
where
    F: Fn(usize) + Sync,
{
    if workers <= 1 {
        f(0);
        return;
    }
    thread::scope(|s| {
        for lane in 0..workers {
            let f = &f;
            s.spawn(move || f(lane));
        }
    });
}

/// Splits `0..n` into `workers` contiguous ranges and runs `f(range)` on each.
pub fn par_ranges<F>(workers: usize, n: usize, f: F)
where
    F: Fn(Range<usize>) + Sync,
{
    if n == 0 {
        return;
    }
    let workers = workers.clamp(1, n);
    join_workers(workers, |lane| {
        let chunk = n.div_ceil(workers);
        let start = lane * chunk;
        if start < n {
            f(start..(start + chunk).min(n));
        }
    });
}

/// Splits a mutable slice into `workers` contiguous chunks; each invocation
/// gets the chunk and its offset into the original slice.
pub fn par_chunks_mut<T, F>(workers: usize, data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    let n = data.len();
    if n == 0 {
        return;
    }
    let workers = workers.clamp(1, n);
    if workers == 1 {
        f(0, data);
        return;
    }
    let chunk = n.div_ceil(workers);
    thread::scope(|s| {
        for (i, piece) in data.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || f(i * chunk, piece));
        }
    });
}

/// Splits a matrix-like slice into row-aligned bands, one per worker; `f`
/// gets the first row index and the band.
pub fn par_row_bands_mut<T, F>(workers: usize, data: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    assert!(row_len > 0 && data.len().is_multiple_of(row_len));
    let rows = data.len() / row_len;
    if rows == 0 {
        return;
    }
    let workers = workers.clamp(1, rows);
    if workers == 1 {
        f(0, data);
        return;
    }
    let rows_per = rows.div_ceil(workers);
    thread::scope(|s| {
        for (band, piece) in data.chunks_mut(rows_per * row_len).enumerate() {
            let f = &f;
            s.spawn(move || f(band * rows_per, piece));
        }
    });
}

/// Maps fixed-size blocks of `0..n` to values of `R`, returned in block
/// order. The block size is independent of the worker count, so folding the
/// returned vector gives a reduction order that never changes.
pub fn par_map_blocks<R, F>(workers: usize, n: usize, block: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, Range<usize>) -> R + Sync,
{
    assert!(block > 0);
    let nblocks = n.div_ceil(block);
    let range_of = |b: usize| (b * block)..((b + 1) * block).min(n);
    if workers <= 1 || nblocks <= 1 {
        return (0..nblocks).map(|b| f(b, range_of(b))).collect();
    }
    let mut out: Vec<Option<R>> = Vec::with_capacity(nblocks);
    out.resize_with(nblocks, || None);
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers.min(nblocks))
            .map(|lane| {
                let f = &f;
                s.spawn(move || {
                    let mut acc = Vec::new();
                    let mut b = lane;
                    while b < nblocks {
                        acc.push((b, f(b, range_of(b))));
                        b += workers;
                    }
                    acc
                })
            })
            .collect();
        for h in handles {
            for (b, r) in h.join().expect("worker panicked") {
                out[b] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.unwrap()).collect()
}

/// Shared mutable slice for scatter phases whose target indices are disjoint
/// by construction (radix-sort scatter, filter compaction, tile fills).
pub struct SharedSlice<'a, T> {
    ptr: *mut T,
    len: usize,
    _marker: std::marker::PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Sync for SharedSlice<'_, T> {}
unsafe impl<T: Send> Send for SharedSlice<'_, T> {}

impl<'a, T> SharedSlice<'a, T> {
    pub fn new(slice: &'a mut [T]) -> Self {
        SharedSlice {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// # Safety
    /// Each index must be written by at most one thread, and nothing may read
    /// the slice until the scatter completes.
    #[inline]
    pub unsafe fn set(&self, index: usize, value: T) {
        debug_assert!(index < self.len);
        unsafe { self.ptr.add(index).write(value) };
    }

    /// # Safety
    /// No thread may be writing `index` concurrently (phases separated by
    /// barriers satisfy this).
    #[inline]
    pub unsafe fn get(&self, index: usize) -> T
    where
        T: Copy,
    {
        debug_assert!(index < self.len);
        unsafe { self.ptr.add(index).read() }
    }

    pub fn as_ptr(&self) -> *const T {
        self.ptr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_cover_everything_once() {
        for workers in [1, 2, 3, 7] {
            let n = 1000;
            let hits: Vec<std::sync::atomic::AtomicU32> = (0..n)
                .map(|_| std::sync::atomic::AtomicU32::new(0))
                .collect();
            par_ranges(workers, n, |r| {
                for i in r {
                    hits[i].fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                }
            });
            assert!(hits
                .iter()
                .all(|h| h.load(std::sync::atomic::Ordering::Relaxed) == 1));
        }
    }

    #[test]
    fn block_results_are_in_block_order_for_any_worker_count() {
        let expected: Vec<usize> = (0..17).collect();
        for workers in [1, 2, 5, 16] {
            let got = par_map_blocks(workers, 170, 10, |b, r| {
                assert_eq!(r.len(), 10);
                b
            });
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn chunks_mut_writes_disjointly() {
        let mut data = vec![0usize; 103];
        par_chunks_mut(4, &mut data, |off, chunk| {
            for (i, v) in chunk.iter_mut().enumerate() {
                *v = off + i;
            }
        });
        assert!(data.iter().enumerate().all(|(i, &v)| v == i));
    }

    #[test]
    fn shared_slice_scatter() {
        let mut data = vec![0u32; 64];
        {
            let shared = SharedSlice::new(&mut data);
            join_workers(4, |lane| {
                let mut i = lane;
                while i < 64 {
                    unsafe { shared.set(i, i as u32 * 2) };
                    i += 4;
                }
            });
        }
        assert!(data.iter().enumerate().all(|(i, &v)| v == i as u32 * 2));
    }
}
