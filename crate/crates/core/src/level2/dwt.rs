//! Separable 2-D discrete wavelet transforms via lifting.
//!
//! Two variants: the reversible integer 5/3 pair (bit-exact inverse) and the
//! irreversible float 9/7 with the published JPEG2000 lifting constants.
//! Each level transforms rows then columns of the current low-pass quadrant,
//! storing results as [low | high] halves; boundaries use whole-sample
//! symmetric extension.

use crate::error::{Error, Result};
use crate::parallel::{par_map_blocks, SharedSlice};

// CDF 9/7 lifting constants (JPEG2000 irreversible transform).
const ALPHA: f32 = -1.586_134_3;
const BETA: f32 = -0.052_980_118;
const GAMMA: f32 = 0.882_911_1;
const DELTA: f32 = 0.443_506_85;
const KAPPA: f32 = 1.230_174_1;

/// 5/3 forward on one even-length line: `out = [low | high]`.
fn lift53_line(input: &[i32], out: &mut [i32]) {
    let n = input.len();
    let half = n / 2;
    let (low, high) = out.split_at_mut(half);
    for i in 0..half {
        let right = if 2 * i + 2 < n {
            input[2 * i + 2]
        } else {
            input[n - 2]
        };
        high[i] = input[2 * i + 1] - ((input[2 * i] + right) >> 1);
    }
    for i in 0..half {
        let left = if i > 0 { high[i - 1] } else { high[0] };
        low[i] = input[2 * i] + ((left + high[i] + 2) >> 2);
    }
}

/// 5/3 inverse: `input = [low | high]`, `out` interleaved.
fn unlift53_line(input: &[i32], out: &mut [i32]) {
    let n = input.len();
    let half = n / 2;
    let (low, high) = input.split_at(half);
    for i in 0..half {
        let left = if i > 0 { high[i - 1] } else { high[0] };
        out[2 * i] = low[i] - ((left + high[i] + 2) >> 2);
    }
    for i in 0..half {
        let right = if 2 * i + 2 < n {
            out[2 * i + 2]
        } else {
            out[n - 2]
        };
        out[2 * i + 1] = high[i] + ((out[2 * i] + right) >> 1);
    }
}

/// 9/7 forward: four lifting steps plus scaling.
fn lift97_line(input: &[f32], out: &mut [f32]) {
    let n = input.len();
    let half = n / 2;
    let mut y = input.to_vec();
    let predict = |y: &mut Vec<f32>, coeff: f32| {
        for k in (1..n).step_by(2) {
            let right = if k + 1 < n { y[k + 1] } else { y[n - 2] };
            y[k] += coeff * (y[k - 1] + right);
        }
    };
    let update = |y: &mut Vec<f32>, coeff: f32| {
        for k in (0..n).step_by(2) {
            let left = if k > 0 { y[k - 1] } else { y[1] };
            y[k] += coeff * (left + y[k + 1]);
        }
    };
    predict(&mut y, ALPHA);
    update(&mut y, BETA);
    predict(&mut y, GAMMA);
    update(&mut y, DELTA);
    let (low, high) = out.split_at_mut(half);
    for i in 0..half {
        low[i] = y[2 * i] / KAPPA;
        high[i] = y[2 * i + 1] * KAPPA;
    }
}

/// 9/7 inverse: unscale, then the lifting steps reversed with negated
/// coefficients.
fn unlift97_line(input: &[f32], out: &mut [f32]) {
    let n = input.len();
    let half = n / 2;
    let (low, high) = input.split_at(half);
    for i in 0..half {
        out[2 * i] = low[i] * KAPPA;
        out[2 * i + 1] = high[i] / KAPPA;
    }
    let unpredict = |y: &mut [f32], coeff: f32| {
        for k in (1..n).step_by(2) {
            let right = if k + 1 < n { y[k + 1] } else { y[n - 2] };
            y[k] -= coeff * (y[k - 1] + right);
        }
    };
    let unupdate = |y: &mut [f32], coeff: f32| {
        for k in (0..n).step_by(2) {
            let left = if k > 0 { y[k - 1] } else { y[1] };
            y[k] -= coeff * (left + y[k + 1]);
        }
    };
    unupdate(out, DELTA);
    unpredict(out, GAMMA);
    unupdate(out, BETA);
    unpredict(out, ALPHA);
}

fn validate(width: usize, height: usize, len: usize, levels: u32) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidInput("levels must be >= 1".to_string()));
    }
    if len != width * height {
        return Err(Error::InvalidInput("pixel length mismatch".to_string()));
    }
    let div = 1usize << levels;
    if width == 0 || height == 0 || !width.is_multiple_of(div) || !height.is_multiple_of(div) {
        return Err(Error::InvalidInput(format!(
            "dimensions {width}x{height} not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

/// Applies `line` to every active row (in parallel row blocks).
fn rows_pass<T: Copy + Send + Default>(
    data: &mut [T],
    width: usize,
    active_w: usize,
    active_h: usize,
    workers: usize,
    line: &(impl Fn(&[T], &mut [T]) + Sync),
) {
    let shared = SharedSlice::new(data);
    par_map_blocks(workers, active_h, 16, |_, rows| {
        let mut input = vec![T::default(); active_w];
        let mut output = vec![T::default(); active_w];
        for row in rows {
            let base = row * width;
            for (i, v) in input.iter_mut().enumerate() {
                *v = unsafe { shared.get(base + i) };
            }
            line(&input, &mut output);
            for (i, v) in output.iter().enumerate() {
                unsafe { shared.set(base + i, *v) };
            }
        }
    });
}

/// Applies `line` to every active column (in parallel column blocks).
fn cols_pass<T: Copy + Send + Default>(
    data: &mut [T],
    width: usize,
    active_w: usize,
    active_h: usize,
    workers: usize,
    line: &(impl Fn(&[T], &mut [T]) + Sync),
) {
    let shared = SharedSlice::new(data);
    par_map_blocks(workers, active_w, 16, |_, cols| {
        let mut input = vec![T::default(); active_h];
        let mut output = vec![T::default(); active_h];
        for col in cols {
            for (i, v) in input.iter_mut().enumerate() {
                *v = unsafe { shared.get(i * width + col) };
            }
            line(&input, &mut output);
            for (i, v) in output.iter().enumerate() {
                unsafe { shared.set(i * width + col, *v) };
            }
        }
    });
}

fn forward_2d<T: Copy + Send + Default>(
    data: &mut [T],
    width: usize,
    height: usize,
    levels: u32,
    workers: usize,
    line: &(impl Fn(&[T], &mut [T]) + Sync),
) -> Result<()> {
    validate(width, height, data.len(), levels)?;
    for level in 0..levels {
        let (w, h) = (width >> level, height >> level);
        rows_pass(data, width, w, h, workers, line);
        cols_pass(data, width, w, h, workers, line);
    }
    Ok(())
}

fn inverse_2d<T: Copy + Send + Default>(
    data: &mut [T],
    width: usize,
    height: usize,
    levels: u32,
    workers: usize,
    line: &(impl Fn(&[T], &mut [T]) + Sync),
) -> Result<()> {
    validate(width, height, data.len(), levels)?;
    for level in (0..levels).rev() {
        let (w, h) = (width >> level, height >> level);
        cols_pass(data, width, w, h, workers, line);
        rows_pass(data, width, w, h, workers, line);
    }
    Ok(())
}

pub fn dwt53_forward(
    data: &mut [i32],
    width: usize,
    height: usize,
    levels: u32,
    workers: usize,
) -> Result<()> {
    forward_2d(data, width, height, levels, workers, &lift53_line)
}

pub fn dwt53_inverse(
    data: &mut [i32],
    width: usize,
    height: usize,
    levels: u32,
    workers: usize,
) -> Result<()> {
    inverse_2d(data, width, height, levels, workers, &unlift53_line)
}

pub fn dwt97_forward(
    data: &mut [f32],
    width: usize,
    height: usize,
    levels: u32,
    workers: usize,
) -> Result<()> {
    forward_2d(data, width, height, levels, workers, &lift97_line)
}

pub fn dwt97_inverse(
    data: &mut [f32],
    width: usize,
    height: usize,
    levels: u32,
    workers: usize,
) -> Result<()> {
    inverse_2d(data, width, height, levels, workers, &unlift97_line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn random_i32_image(w: usize, h: usize, seed: u64) -> Vec<i32> {
        let rng = CounterRng::new(seed, "dwt-test");
        (0..w * h)
            .map(|i| (rng.at(i as u64) % 1024) as i32 - 512)
            .collect()
    }

    fn random_f32_image(w: usize, h: usize, seed: u64) -> Vec<f32> {
        let mut rng = CounterRng::new(seed, "dwt-test");
        let mut out = vec![0.0f32; w * h];
        rng.fill_f32(&mut out, 0.0, 1.0);
        out
    }

    #[test]
    fn constant_image_has_zero_high_pass_53() {
        let (w, h) = (16, 16);
        let mut data = vec![7i32; w * h];
        dwt53_forward(&mut data, w, h, 2, 2).unwrap();
        // everything outside the final low-pass quadrant must be exactly zero
        let (lw, lh) = (w >> 2, h >> 2);
        for row in 0..h {
            for col in 0..w {
                if row >= lh || col >= lw {
                    assert_eq!(data[row * w + col], 0, "({row},{col})");
                }
            }
        }
    }

    #[test]
    fn dwt53_round_trip_is_bit_exact() {
        let (w, h) = (32, 24);
        let original = random_i32_image(w, h, 1);
        let mut data = original.clone();
        dwt53_forward(&mut data, w, h, 3, 2).unwrap();
        assert_ne!(data, original);
        dwt53_inverse(&mut data, w, h, 3, 2).unwrap();
        assert_eq!(data, original);
    }

    #[test]
    fn dwt97_round_trip_is_close() {
        let (w, h) = (64, 64);
        let original = random_f32_image(w, h, 2);
        let mut data = original.clone();
        dwt97_forward(&mut data, w, h, 3, 3).unwrap();
        dwt97_inverse(&mut data, w, h, 3, 3).unwrap();
        let max_err = data
            .iter()
            .zip(&original)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err < 1e-4, "round-trip error {max_err}");
    }

    #[test]
    fn constant_image_high_pass_is_tiny_97() {
        let (w, h) = (16, 16);
        let mut data = vec![1.0f32; w * h];
        dwt97_forward(&mut data, w, h, 1, 1).unwrap();
        let (lw, lh) = (w >> 1, h >> 1);
        for row in 0..h {
            for col in 0..w {
                if row >= lh || col >= lw {
                    assert!(data[row * w + col].abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn indivisible_dimensions_are_rejected() {
        let mut data = vec![0i32; 12 * 10];
        assert!(dwt53_forward(&mut data, 12, 10, 2, 1).is_err());
        let mut data = vec![0.0f32; 9 * 8];
        assert!(dwt97_forward(&mut data, 9, 8, 1, 1).is_err());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let (w, h) = (32, 32);
        let mut one = random_f32_image(w, h, 3);
        let mut four = one.clone();
        dwt97_forward(&mut one, w, h, 2, 1).unwrap();
        dwt97_forward(&mut four, w, h, 2, 4).unwrap();
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&one), bits(&four));
    }

    proptest! {
        #[test]
        fn dwt53_round_trips_for_arbitrary_even_shapes(
            wq in 1usize..12,
            hq in 1usize..12,
            levels in 1u32..3,
            seed in 0u64..20,
        ) {
            let div = 1usize << levels;
            let (w, h) = (wq * div, hq * div);
            let original = random_i32_image(w, h, seed);
            let mut data = original.clone();
            dwt53_forward(&mut data, w, h, levels, 2).unwrap();
            dwt53_inverse(&mut data, w, h, levels, 2).unwrap();
            prop_assert_eq!(data, original);
        }
    }
}
