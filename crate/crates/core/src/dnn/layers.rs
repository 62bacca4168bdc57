//! Elementwise and normalization layers: ReLU, average pooling, softmax,
//! cross-channel LRN, and dropout.

use crate::error::{Error, Result};
use crate::parallel::{par_chunks_mut, par_map_blocks, SharedSlice};
use crate::real::Real;
use crate::rng::CounterRng;

fn require_same_shape<T: Real>(a: &Tensor4<T>, b: &Tensor4<T>, what: &str) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::InvalidInput(format!(
            "{what}: shape {:?} does not match {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

use super::tensor::Tensor4;

// ── ReLU ─────────────────────────────────────────────────────────────────

/// `y_i = max(0, x_i)`.
pub fn relu_forward<T: Real>(x: &Tensor4<T>, workers: usize) -> Tensor4<T> {
    let mut y = x.clone();
    par_chunks_mut(workers, &mut y.data, |_, chunk| {
        for v in chunk.iter_mut() {
            *v = v.max(T::zero());
        }
    });
    y
}

/// `dx_i = dy_i` where `x_i > 0`, else 0.
pub fn relu_backward<T: Real>(
    x: &Tensor4<T>,
    dy: &Tensor4<T>,
    workers: usize,
) -> Result<Tensor4<T>> {
    require_same_shape(x, dy, "relu_backward")?;
    let mut dx = dy.clone();
    par_chunks_mut(workers, &mut dx.data, |offset, chunk| {
        for (i, v) in chunk.iter_mut().enumerate() {
            if x.data[offset + i] <= T::zero() {
                *v = T::zero();
            }
        }
    });
    Ok(dx)
}

// ── Average pooling ──────────────────────────────────────────────────────

fn pool_output_dims(h: usize, w: usize, window: usize, stride: usize) -> Result<(usize, usize)> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidInput(
            "window and stride must be >= 1".to_string(),
        ));
    }
    if h < window
        || w < window
        || !(h - window).is_multiple_of(stride)
        || !(w - window).is_multiple_of(stride)
    {
        return Err(Error::InvalidInput(format!(
            "pooling window {window}/stride {stride} does not tile {h}x{w}"
        )));
    }
    Ok(((h - window) / stride + 1, (w - window) / stride + 1))
}

/// Each output is the mean of its window.
pub fn avgpool_forward<T: Real>(
    x: &Tensor4<T>,
    window: usize,
    stride: usize,
    workers: usize,
) -> Result<Tensor4<T>> {
    let (oh, ow) = pool_output_dims(x.h, x.w, window, stride)?;
    let mut y = Tensor4::zeros(x.n, x.c, oh, ow);
    let planes = x.n * x.c;
    let scale = T::from_f64(1.0 / (window * window) as f64);
    {
        let out = SharedSlice::new(&mut y.data);
        par_map_blocks(workers, planes, 1, |_, range| {
            for plane in range {
                let (n, c) = (plane / x.c, plane % x.c);
                for i in 0..oh {
                    for j in 0..ow {
                        let mut acc = T::zero();
                        for u in 0..window {
                            for v in 0..window {
                                acc += x.at(n, c, i * stride + u, j * stride + v);
                            }
                        }
                        let idx = ((n * x.c + c) * oh + i) * ow + j;
                        unsafe { out.set(idx, acc * scale) };
                    }
                }
            }
        });
    }
    Ok(y)
}

/// Distributes `dy / window^2` back to every contributing input.
pub fn avgpool_backward<T: Real>(
    x: &Tensor4<T>,
    dy: &Tensor4<T>,
    window: usize,
    stride: usize,
    workers: usize,
) -> Result<Tensor4<T>> {
    let (oh, ow) = pool_output_dims(x.h, x.w, window, stride)?;
    if dy.shape() != (x.n, x.c, oh, ow) {
        return Err(Error::InvalidInput(
            "avgpool_backward: bad dy shape".to_string(),
        ));
    }
    let mut dx = Tensor4::zeros(x.n, x.c, x.h, x.w);
    let scale = T::from_f64(1.0 / (window * window) as f64);
    let plane_len = x.h * x.w;
    {
        let out = SharedSlice::new(&mut dx.data);
        par_map_blocks(workers, x.n * x.c, 1, |_, range| {
            let mut local = vec![T::zero(); plane_len];
            for plane in range {
                local.fill(T::zero());
                let (n, c) = (plane / x.c, plane % x.c);
                for i in 0..oh {
                    for j in 0..ow {
                        let g = dy.at(n, c, i, j) * scale;
                        for u in 0..window {
                            for v in 0..window {
                                local[(i * stride + u) * x.w + (j * stride + v)] += g;
                            }
                        }
                    }
                }
                for (k, &v) in local.iter().enumerate() {
                    unsafe { out.set(plane * plane_len + k, v) };
                }
            }
        });
    }
    Ok(dx)
}

// ── Softmax (over the channel axis) ──────────────────────────────────────

/// Per-(n, h, w) fiber: subtract the max, exponentiate, normalize.
pub fn softmax_forward<T: Real>(z: &Tensor4<T>, workers: usize) -> Tensor4<T> {
    let mut y = Tensor4::zeros(z.n, z.c, z.h, z.w);
    let fibers = z.n * z.h * z.w;
    let spatial = z.h * z.w;
    {
        let out = SharedSlice::new(&mut y.data);
        par_map_blocks(workers, fibers, 1024, |_, range| {
            for fiber in range {
                let n = fiber / spatial;
                let hw = fiber % spatial;
                let base = n * z.c * spatial + hw;
                let mut max = T::neg_infinity();
                for c in 0..z.c {
                    max = max.max(z.data[base + c * spatial]);
                }
                let mut sum = T::zero();
                for c in 0..z.c {
                    sum += (z.data[base + c * spatial] - max).exp();
                }
                for c in 0..z.c {
                    let v = (z.data[base + c * spatial] - max).exp() / sum;
                    unsafe { out.set(base + c * spatial, v) };
                }
            }
        });
    }
    y
}

/// `dz_i = y_i * (dy_i - sum_k dy_k y_k)` per fiber.
pub fn softmax_backward<T: Real>(
    y: &Tensor4<T>,
    dy: &Tensor4<T>,
    workers: usize,
) -> Result<Tensor4<T>> {
    require_same_shape(y, dy, "softmax_backward")?;
    let mut dz = Tensor4::zeros(y.n, y.c, y.h, y.w);
    let fibers = y.n * y.h * y.w;
    let spatial = y.h * y.w;
    {
        let out = SharedSlice::new(&mut dz.data);
        par_map_blocks(workers, fibers, 1024, |_, range| {
            for fiber in range {
                let n = fiber / spatial;
                let hw = fiber % spatial;
                let base = n * y.c * spatial + hw;
                let mut dot = T::zero();
                for c in 0..y.c {
                    dot += dy.data[base + c * spatial] * y.data[base + c * spatial];
                }
                for c in 0..y.c {
                    let idx = base + c * spatial;
                    unsafe { out.set(idx, y.data[idx] * (dy.data[idx] - dot)) };
                }
            }
        });
    }
    Ok(dz)
}

// ── Local response normalization (cross-channel) ─────────────────────────

/// `b_i = a_i / (k + alpha * sum_{j in window(i)} a_j^2)^beta`, window
/// `[max(0, i - n/2), min(N-1, i + n/2)]`.
#[derive(Debug, Clone)]
pub struct LrnParams {
    pub n_neighborhood: usize,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LrnParams {
    fn validate(&self, channels: usize) -> Result<()> {
        if self.n_neighborhood < 1 {
            return Err(Error::InvalidInput(
                "LRN neighborhood must be >= 1".to_string(),
            ));
        }
        if self.n_neighborhood > 2 * channels {
            return Err(Error::InvalidInput(format!(
                "LRN neighborhood {} too large for {channels} channels",
                self.n_neighborhood
            )));
        }
        if self.k <= 0.0 {
            return Err(Error::InvalidInput("LRN k must be positive".to_string()));
        }
        Ok(())
    }
}

fn lrn_scales<T: Real>(a: &Tensor4<T>, p: &LrnParams, base: usize, spatial: usize) -> Vec<f64> {
    let half = p.n_neighborhood / 2;
    let channels = a.c;
    let mut scales = vec![0.0f64; channels];
    for (i, scale) in scales.iter_mut().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (channels - 1).min(i + half);
        let mut sum = 0.0f64;
        for j in lo..=hi {
            let v = a.data[base + j * spatial].as_f64();
            sum += v * v;
        }
        *scale = p.k + p.alpha * sum;
    }
    scales
}

pub fn lrn_forward<T: Real>(a: &Tensor4<T>, p: &LrnParams, workers: usize) -> Result<Tensor4<T>> {
    p.validate(a.c)?;
    let mut b = Tensor4::zeros(a.n, a.c, a.h, a.w);
    let fibers = a.n * a.h * a.w;
    let spatial = a.h * a.w;
    {
        let out = SharedSlice::new(&mut b.data);
        par_map_blocks(workers, fibers, 512, |_, range| {
            for fiber in range {
                let n = fiber / spatial;
                let hw = fiber % spatial;
                let base = n * a.c * spatial + hw;
                let scales = lrn_scales(a, p, base, spatial);
                for (c, scale) in scales.iter().enumerate() {
                    let idx = base + c * spatial;
                    let v = a.data[idx].as_f64() * scale.powf(-p.beta);
                    unsafe { out.set(idx, T::from_f64(v)) };
                }
            }
        });
    }
    Ok(b)
}

/// Analytic LRN gradient:
/// `dx_m = dy_m * S_m^(-beta) - 2*alpha*beta*a_m * sum_{i in window(m)} dy_i * a_i * S_i^(-beta-1)`.
pub fn lrn_backward<T: Real>(
    a: &Tensor4<T>,
    p: &LrnParams,
    dy: &Tensor4<T>,
    workers: usize,
) -> Result<Tensor4<T>> {
    p.validate(a.c)?;
    require_same_shape(a, dy, "lrn_backward")?;
    let mut dx = Tensor4::zeros(a.n, a.c, a.h, a.w);
    let fibers = a.n * a.h * a.w;
    let spatial = a.h * a.w;
    let half = p.n_neighborhood / 2;
    {
        let out = SharedSlice::new(&mut dx.data);
        par_map_blocks(workers, fibers, 512, |_, range| {
            for fiber in range {
                let n = fiber / spatial;
                let hw = fiber % spatial;
                let base = n * a.c * spatial + hw;
                let scales = lrn_scales(a, p, base, spatial);
                for m in 0..a.c {
                    let lo = m.saturating_sub(half);
                    let hi = (a.c - 1).min(m + half);
                    let a_m = a.data[base + m * spatial].as_f64();
                    let mut cross = 0.0f64;
                    // window membership is symmetric: i covers m iff m covers i
                    for i in lo..=hi {
                        let dy_i = dy.data[base + i * spatial].as_f64();
                        let a_i = a.data[base + i * spatial].as_f64();
                        cross += dy_i * a_i * scales[i].powf(-p.beta - 1.0);
                    }
                    let dy_m = dy.data[base + m * spatial].as_f64();
                    let v = dy_m * scales[m].powf(-p.beta) - 2.0 * p.alpha * p.beta * a_m * cross;
                    unsafe { out.set(base + m * spatial, T::from_f64(v)) };
                }
            }
        });
    }
    Ok(dx)
}

// ── Dropout (inverted) ───────────────────────────────────────────────────

/// Per-element Bernoulli mask keyed by (seed, element index); regenerable
/// and independent of worker count.
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub keep_prob: f64,
    pub seed: u64,
    pub mask: Vec<u8>,
}

impl DropoutMask {
    pub fn generate(len: usize, keep_prob: f64, seed: u64) -> DropoutMask {
        let rng = CounterRng::new(seed, "dropout");
        let mask = (0..len)
            .map(|i| {
                let u = (rng.at(i as u64) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                (u < keep_prob) as u8
            })
            .collect();
        DropoutMask {
            keep_prob,
            seed,
            mask,
        }
    }

    pub fn kept_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().map(|&m| m as u64).sum::<u64>() as f64 / self.mask.len() as f64
    }
}

/// Inverted dropout: kept activations scale by `1 / keep_prob`.
pub fn dropout_forward<T: Real>(
    x: &Tensor4<T>,
    keep_prob: f64,
    seed: u64,
    workers: usize,
) -> Result<(Tensor4<T>, DropoutMask)> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::InvalidInput(
            "keep_prob must be in (0, 1]".to_string(),
        ));
    }
    let mask = DropoutMask::generate(x.len(), keep_prob, seed);
    let scale = T::from_f64(1.0 / keep_prob);
    let mut y = x.clone();
    par_chunks_mut(workers, &mut y.data, |offset, chunk| {
        for (i, v) in chunk.iter_mut().enumerate() {
            *v = if mask.mask[offset + i] == 1 {
                *v * scale
            } else {
                T::zero()
            };
        }
    });
    Ok((y, mask))
}

pub fn dropout_backward<T: Real>(
    mask: &DropoutMask,
    dy: &Tensor4<T>,
    workers: usize,
) -> Result<Tensor4<T>> {
    if mask.mask.len() != dy.len() {
        return Err(Error::InvalidInput(
            "dropout_backward: mask length mismatch".to_string(),
        ));
    }
    let scale = T::from_f64(1.0 / mask.keep_prob);
    let mut dx = dy.clone();
    par_chunks_mut(workers, &mut dx.data, |offset, chunk| {
        for (i, v) in chunk.iter_mut().enumerate() {
            *v = if mask.mask[offset + i] == 1 {
                *v * scale
            } else {
                T::zero()
            };
        }
    });
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negatives() {
        let x: Tensor4<f64> = Tensor4::from_vec(1, 1, 1, 2, vec![-1.0, 2.0]);
        let y = relu_forward(&x, 1);
        assert_eq!(y.data, vec![0.0, 2.0]);
    }

    #[test]
    fn relu_dead_region_kills_gradients() {
        let x: Tensor4<f64> = Tensor4::from_vec(1, 1, 1, 3, vec![-1.0, -0.5, -2.0]);
        let dy: Tensor4<f64> = Tensor4::from_vec(1, 1, 1, 3, vec![1.0, 2.0, 3.0]);
        let y = relu_forward(&x, 1);
        let dx = relu_backward(&x, &dy, 1).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.0));
        assert!(dx.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn avgpool_of_constant_is_constant() {
        let x: Tensor4<f32> = Tensor4::from_vec(1, 1, 4, 4, vec![2.5; 16]);
        let y = avgpool_forward(&x, 2, 2, 1).unwrap();
        assert_eq!(y.shape(), (1, 1, 2, 2));
        assert!(y.data.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn avgpool_two_by_two_means() {
        let x: Tensor4<f64> = Tensor4::from_vec(1, 1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let y = avgpool_forward(&x, 2, 2, 1).unwrap();
        assert_eq!(y.data, vec![2.5]);
    }

    #[test]
    fn avgpool_rejects_non_tiling_windows() {
        let x: Tensor4<f64> = Tensor4::zeros(1, 1, 5, 5);
        assert!(avgpool_forward(&x, 2, 2, 1).is_err());
    }

    #[test]
    fn softmax_of_uniform_input_is_uniform() {
        let x: Tensor4<f64> = Tensor4::from_vec(1, 4, 1, 1, vec![0.7; 4]);
        let y = softmax_forward(&x, 1);
        for &v in &y.data {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_fibers_sum_to_one_and_shift_invariant() {
        let mut rng = CounterRng::new(3, "softmax-test");
        let z: Tensor4<f64> = Tensor4::random(2, 5, 3, 3, &mut rng, -4.0, 4.0);
        let y = softmax_forward(&z, 2);
        let spatial = z.h * z.w;
        for n in 0..z.n {
            for hw in 0..spatial {
                let base = n * z.c * spatial + hw;
                let sum: f64 = (0..z.c).map(|c| y.data[base + c * spatial]).sum();
                assert!((sum - 1.0).abs() < 1e-6);
            }
        }
        let shifted = Tensor4::from_vec(
            z.n,
            z.c,
            z.h,
            z.w,
            z.data.iter().map(|v| v + 13.25).collect(),
        );
        let y_shifted = softmax_forward(&shifted, 2);
        for (a, b) in y.data.iter().zip(&y_shifted.data) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn lrn_with_zero_alpha_divides_by_k_pow_beta() {
        let mut rng = CounterRng::new(4, "lrn-test");
        let a: Tensor4<f64> = Tensor4::random(1, 3, 2, 2, &mut rng, -1.0, 1.0);
        let p = LrnParams {
            n_neighborhood: 3,
            k: 2.0,
            alpha: 0.0,
            beta: 0.75,
        };
        let b = lrn_forward(&a, &p, 1).unwrap();
        let scale = 2.0f64.powf(-0.75);
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x * scale - y).abs() < 1e-12);
        }
    }

    #[test]
    fn lrn_hand_case_single_channel() {
        // k=1, alpha=1, beta=1, n=1, a=2 -> window is {self}, b = 2/(1+4)
        let a: Tensor4<f64> = Tensor4::from_vec(1, 1, 1, 1, vec![2.0]);
        let p = LrnParams {
            n_neighborhood: 1,
            k: 1.0,
            alpha: 1.0,
            beta: 1.0,
        };
        let b = lrn_forward(&a, &p, 1).unwrap();
        assert!((b.data[0] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn lrn_rejects_oversize_neighborhood() {
        let a: Tensor4<f64> = Tensor4::zeros(1, 2, 1, 1);
        let p = LrnParams {
            n_neighborhood: 5,
            k: 1.0,
            alpha: 1.0,
            beta: 1.0,
        };
        assert!(lrn_forward(&a, &p, 1).is_err());
    }

    #[test]
    fn dropout_with_full_keep_is_identity() {
        let mut rng = CounterRng::new(5, "dropout-test");
        let x: Tensor4<f32> = Tensor4::random(2, 3, 4, 4, &mut rng, -1.0, 1.0);
        let (y, mask) = dropout_forward(&x, 1.0, 17, 2).unwrap();
        assert_eq!(y.data, x.data);
        assert!(mask.mask.iter().all(|&m| m == 1));
    }

    #[test]
    fn dropout_kept_fraction_concentrates() {
        // binomial: sigma = sqrt(p(1-p)/n) ~ 5e-4; 0.002 is a 4-sigma bound
        let mask = DropoutMask::generate(1_000_000, 0.5, 17);
        assert!((mask.kept_fraction() - 0.5).abs() < 0.002);
    }

    #[test]
    fn dropout_preserves_the_mean_in_expectation() {
        // inverted scaling: E[y_i] = x_i, so mean(y) concentrates on mean(x);
        // var(mean(y) - mean(x)) = (1-p)/p * sum(x_i^2) / n^2
        let mut rng = CounterRng::new(6, "dropout-test");
        let x: Tensor4<f64> = Tensor4::random(8, 16, 64, 64, &mut rng, 0.0, 1.0);
        let p = 0.5;
        let (y, _) = dropout_forward(&x, p, 23, 2).unwrap();
        let n = x.len() as f64;
        let mean_x: f64 = x.data.iter().sum::<f64>() / n;
        let mean_y: f64 = y.data.iter().sum::<f64>() / n;
        let sum_sq: f64 = x.data.iter().map(|v| v * v).sum();
        let sigma = ((1.0 - p) / p * sum_sq).sqrt() / n;
        assert!(
            (mean_y - mean_x).abs() <= 3.0 * sigma,
            "mean {mean_y} vs {mean_x}, 3 sigma {}",
            3.0 * sigma
        );
    }

    #[test]
    fn dropout_mask_is_deterministic_in_seed() {
        let a = DropoutMask::generate(10_000, 0.3, 9);
        let b = DropoutMask::generate(10_000, 0.3, 9);
        let c = DropoutMask::generate(10_000, 0.3, 10);
        assert_eq!(a.mask, b.mask);
        assert_ne!(a.mask, c.mask);
    }

    #[test]
    fn dropout_rejects_zero_keep_prob() {
        let x: Tensor4<f32> = Tensor4::zeros(1, 1, 2, 2);
        assert!(dropout_forward(&x, 0.0, 1, 1).is_err());
    }
}
