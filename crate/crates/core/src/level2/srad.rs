//! Speckle-reducing anisotropic diffusion.
//!
//! Each iteration runs two phases separated by full barriers across the
//! worker pool (the grid-wide synchronization this benchmark exists to
//! measure): phase 1 computes directional derivatives and the diffusion
//! coefficient per pixel from the instantaneous coefficient of variation,
//! phase 2 applies the divergence update. The per-iteration image statistics
//! reduce over fixed 4096-pixel blocks folded in block order, so parallel
//! output is bit-identical to the sequential reference.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Barrier;

use crate::error::{Error, Result};
use crate::parallel::{join_workers, SharedSlice};
use crate::rng::CounterRng;

const BLOCK: usize = 4096;

/// Dense single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Image2D {
    /// Seeded positive-valued noisy image.
    pub fn random(width: usize, height: usize, rng: &mut CounterRng) -> Image2D {
        let mut pixels = vec![0.0f32; width * height];
        rng.fill_f32(&mut pixels, 1.0, 2.0);
        Image2D {
            width,
            height,
            pixels,
        }
    }

    pub fn variance(&self) -> f64 {
        let n = self.pixels.len() as f64;
        let mean: f64 = self.pixels.iter().map(|&p| p as f64).sum::<f64>() / n;
        self.pixels
            .iter()
            .map(|&p| (p as f64 - mean) * (p as f64 - mean))
            .sum::<f64>()
            / n
    }
}

fn validate(image: &Image2D, lambda: f32) -> Result<()> {
    if image.width < 3 || image.height < 3 {
        return Err(Error::InvalidInput(
            "image must be at least 3x3".to_string(),
        ));
    }
    if image.pixels.len() != image.width * image.height {
        return Err(Error::InvalidInput("pixel length mismatch".to_string()));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidInput("lambda must be in (0, 1]".to_string()));
    }
    Ok(())
}

/// Normalized image variance `var / mean^2` over fixed blocks in block order.
fn q0_squared(pixels: &[f32], block_partials: &mut [(f64, f64)]) -> f64 {
    let size = pixels.len();
    for (b, partial) in block_partials.iter_mut().enumerate() {
        let range = b * BLOCK..((b + 1) * BLOCK).min(size);
        let mut sum = 0.0f64;
        let mut sum2 = 0.0f64;
        for &p in &pixels[range] {
            sum += p as f64;
            sum2 += p as f64 * p as f64;
        }
        *partial = (sum, sum2);
    }
    fold_q0(block_partials, size)
}

fn fold_q0(block_partials: &[(f64, f64)], size: usize) -> f64 {
    let mut sum = 0.0f64;
    let mut sum2 = 0.0f64;
    for &(s, s2) in block_partials {
        sum += s;
        sum2 += s2;
    }
    let mean = sum / size as f64;
    let var = sum2 / size as f64 - mean * mean;
    var / (mean * mean)
}

/// One pixel of phase 1: derivatives and the clamped diffusion coefficient.
#[inline]
fn phase1_pixel(
    j_img: &[f32],
    width: usize,
    height: usize,
    row: usize,
    col: usize,
    q0sqr: f32,
) -> (f32, f32, f32, f32, f32) {
    let idx = row * width + col;
    let center = j_img[idx];
    let up = j_img[row.saturating_sub(1) * width + col];
    let down = j_img[(row + 1).min(height - 1) * width + col];
    let left = j_img[row * width + col.saturating_sub(1)];
    let right = j_img[row * width + (col + 1).min(width - 1)];
    let d_n = up - center;
    let d_s = down - center;
    let d_w = left - center;
    let d_e = right - center;
    let g2 = (d_n * d_n + d_s * d_s + d_w * d_w + d_e * d_e) / (center * center);
    let l = (d_n + d_s + d_w + d_e) / center;
    let num = 0.5 * g2 - (1.0 / 16.0) * (l * l);
    let den = 1.0 + 0.25 * l;
    let qsqr = num / (den * den);
    let coeff = if q0sqr == 0.0 {
        // Noise-free image: no diffusion pressure; fixed point must be exact.
        1.0
    } else {
        let den2 = (qsqr - q0sqr) / (q0sqr * (1.0 + q0sqr));
        let c = 1.0 / (1.0 + den2);
        if c.is_finite() {
            c.clamp(0.0, 1.0)
        } else {
            1.0
        }
    };
    (coeff, d_n, d_s, d_w, d_e)
}

/// One pixel of phase 2: divergence update.
#[inline]
fn phase2_pixel(
    planes: &Planes<'_>,
    width: usize,
    height: usize,
    row: usize,
    col: usize,
    lambda: f32,
    center: f32,
) -> f32 {
    let idx = row * width + col;
    let c_n = planes.c[idx];
    let c_s = planes.c[(row + 1).min(height - 1) * width + col];
    let c_w = planes.c[idx];
    let c_e = planes.c[row * width + (col + 1).min(width - 1)];
    let div = c_n * planes.d_n[idx]
        + c_s * planes.d_s[idx]
        + c_w * planes.d_w[idx]
        + c_e * planes.d_e[idx];
    center + 0.25 * lambda * div
}

struct Planes<'a> {
    c: &'a [f32],
    d_n: &'a [f32],
    d_s: &'a [f32],
    d_w: &'a [f32],
    d_e: &'a [f32],
}

/// Parallel SRAD over persistent workers with per-phase barriers.
pub fn srad(image: &Image2D, lambda: f32, iterations: usize, workers: usize) -> Result<Image2D> {
    validate(image, lambda)?;
    let (width, height) = (image.width, image.height);
    let size = width * height;
    let mut j_img = image.pixels.clone();
    let mut c_plane = vec![0.0f32; size];
    let mut d_n = vec![0.0f32; size];
    let mut d_s = vec![0.0f32; size];
    let mut d_w = vec![0.0f32; size];
    let mut d_e = vec![0.0f32; size];
    let nblocks = size.div_ceil(BLOCK);
    let mut partials = vec![(0.0f64, 0.0f64); nblocks];

    let workers = workers.clamp(1, height);
    {
        let j_s = SharedSlice::new(&mut j_img);
        let c_s = SharedSlice::new(&mut c_plane);
        let dn_s = SharedSlice::new(&mut d_n);
        let ds_s = SharedSlice::new(&mut d_s);
        let dw_s = SharedSlice::new(&mut d_w);
        let de_s = SharedSlice::new(&mut d_e);
        let p_s = SharedSlice::new(&mut partials);
        let q0_bits = AtomicU64::new(0);
        let barrier = Barrier::new(workers);
        // Row bands per lane; every lane executes the same barrier sequence.
        join_workers(workers, |lane| {
            let rows_per = height.div_ceil(workers);
            let row_lo = lane * rows_per;
            let row_hi = ((lane + 1) * rows_per).min(height);
            for _ in 0..iterations {
                // Statistics over fixed blocks (round-robin across lanes).
                // Safety: each block index is written by exactly one lane,
                // and reads happen after the barrier.
                let mut b = lane;
                while b < nblocks {
                    let range = b * BLOCK..((b + 1) * BLOCK).min(size);
                    let mut sum = 0.0f64;
                    let mut sum2 = 0.0f64;
                    for idx in range {
                        let p = unsafe { j_s.get(idx) } as f64;
                        sum += p;
                        sum2 += p * p;
                    }
                    unsafe { p_s.set(b, (sum, sum2)) };
                    b += workers;
                }
                barrier.wait();
                if lane == 0 {
                    let blocks: Vec<(f64, f64)> =
                        (0..nblocks).map(|i| unsafe { p_s.get(i) }).collect();
                    q0_bits.store(fold_q0(&blocks, size).to_bits(), Ordering::Relaxed);
                }
                barrier.wait();
                let q0sqr = f64::from_bits(q0_bits.load(Ordering::Relaxed)) as f32;
                // Phase 1: coefficients, own rows only. The image is
                // read-only during this phase, so a shared view is sound.
                let j_view = unsafe { std::slice::from_raw_parts(j_s.as_ptr(), size) };
                for row in row_lo..row_hi {
                    for col in 0..width {
                        let (coeff, n, s, w, e) =
                            phase1_pixel(j_view, width, height, row, col, q0sqr);
                        let idx = row * width + col;
                        unsafe {
                            c_s.set(idx, coeff);
                            dn_s.set(idx, n);
                            ds_s.set(idx, s);
                            dw_s.set(idx, w);
                            de_s.set(idx, e);
                        }
                    }
                }
                barrier.wait();
                // Phase 2: divergence update, own rows only. Coefficient
                // planes were completed before the barrier and are read-only
                // now.
                let planes = Planes {
                    c: unsafe { std::slice::from_raw_parts(c_s.as_ptr(), size) },
                    d_n: unsafe { std::slice::from_raw_parts(dn_s.as_ptr(), size) },
                    d_s: unsafe { std::slice::from_raw_parts(ds_s.as_ptr(), size) },
                    d_w: unsafe { std::slice::from_raw_parts(dw_s.as_ptr(), size) },
                    d_e: unsafe { std::slice::from_raw_parts(de_s.as_ptr(), size) },
                };
                for row in row_lo..row_hi {
                    for col in 0..width {
                        let idx = row * width + col;
                        let center = unsafe { j_s.get(idx) };
                        let updated =
                            phase2_pixel(&planes, width, height, row, col, lambda, center);
                        unsafe { j_s.set(idx, updated) };
                    }
                }
                barrier.wait();
            }
        });
    }
    Ok(Image2D {
        width,
        height,
        pixels: j_img,
    })
}

/// Single-threaded reference with the same phase structure and summation
/// contract.
pub fn srad_reference(image: &Image2D, lambda: f32, iterations: usize) -> Result<Image2D> {
    validate(image, lambda)?;
    let (width, height) = (image.width, image.height);
    let size = width * height;
    let mut j_img = image.pixels.clone();
    let mut c_plane = vec![0.0f32; size];
    let mut d_n = vec![0.0f32; size];
    let mut d_s = vec![0.0f32; size];
    let mut d_w = vec![0.0f32; size];
    let mut d_e = vec![0.0f32; size];
    let mut partials = vec![(0.0f64, 0.0f64); size.div_ceil(BLOCK)];
    for _ in 0..iterations {
        let q0sqr = q0_squared(&j_img, &mut partials) as f32;
        for row in 0..height {
            for col in 0..width {
                let (coeff, n, s, w, e) = phase1_pixel(&j_img, width, height, row, col, q0sqr);
                let idx = row * width + col;
                c_plane[idx] = coeff;
                d_n[idx] = n;
                d_s[idx] = s;
                d_w[idx] = w;
                d_e[idx] = e;
            }
        }
        let planes = Planes {
            c: &c_plane,
            d_n: &d_n,
            d_s: &d_s,
            d_w: &d_w,
            d_e: &d_e,
        };
        let mut next = j_img.clone();
        for row in 0..height {
            for col in 0..width {
                let idx = row * width + col;
                next[idx] = phase2_pixel(&planes, width, height, row, col, lambda, j_img[idx]);
            }
        }
        j_img = next;
    }
    Ok(Image2D {
        width,
        height,
        pixels: j_img,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_a_fixed_point() {
        let image = Image2D {
            width: 8,
            height: 8,
            pixels: vec![1.5; 64],
        };
        let out = srad(&image, 0.5, 5, 2).unwrap();
        assert_eq!(out.pixels, image.pixels);
    }

    #[test]
    fn one_iteration_reduces_variance_of_noisy_image() {
        let mut rng = CounterRng::new(3, "srad-test");
        let image = Image2D::random(32, 32, &mut rng);
        let out = srad(&image, 0.5, 1, 1).unwrap();
        assert!(
            out.variance() < image.variance(),
            "variance {} did not drop below {}",
            out.variance(),
            image.variance()
        );
    }

    #[test]
    fn parallel_is_bitwise_equal_to_reference() {
        let mut rng = CounterRng::new(5, "srad-test");
        let image = Image2D::random(37, 29, &mut rng);
        let par = srad(&image, 0.5, 4, 3).unwrap();
        let seq = srad_reference(&image, 0.5, 4).unwrap();
        assert_eq!(
            par.pixels.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            seq.pixels.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn too_small_image_is_an_error() {
        let image = Image2D {
            width: 2,
            height: 8,
            pixels: vec![1.0; 16],
        };
        assert!(srad(&image, 0.5, 1, 1).is_err());
    }

    #[test]
    fn out_of_range_lambda_is_an_error() {
        let image = Image2D {
            width: 4,
            height: 4,
            pixels: vec![1.0; 16],
        };
        assert!(srad(&image, 0.0, 1, 1).is_err());
        assert!(srad(&image, 1.5, 1, 1).is_err());
    }
}
