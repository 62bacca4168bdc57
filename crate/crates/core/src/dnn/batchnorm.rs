//! Batch normalization (training mode) over the (n, h, w) axes per channel.

use crate::error::{Error, Result};
use crate::parallel::par_map_blocks;
use crate::real::Real;

use super::tensor::Tensor4;

/// Learnable scale/shift plus the statistics saved by the forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormState<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub epsilon: T,
    pub saved_mean: Vec<T>,
    pub saved_invstd: Vec<T>,
}

impl<T: Real> BatchNormState<T> {
    pub fn new(channels: usize, epsilon: f64) -> BatchNormState<T> {
        BatchNormState {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            epsilon: T::from_f64(epsilon),
            saved_mean: vec![T::zero(); channels],
            saved_invstd: vec![T::zero(); channels],
        }
    }

    fn validate(&self, x_channels: usize) -> Result<()> {
        if self.gamma.len() != x_channels || self.beta.len() != x_channels {
            return Err(Error::InvalidInput(format!(
                "batchnorm state has {} channels, input has {x_channels}",
                self.gamma.len()
            )));
        }
        if self.epsilon <= T::zero() {
            return Err(Error::InvalidInput("epsilon must be positive".to_string()));
        }
        Ok(())
    }
}

/// Iterates one channel's elements in a fixed order.
#[inline]
fn for_channel<T: Real>(x: &Tensor4<T>, c: usize, mut f: impl FnMut(usize, T)) {
    let spatial = x.h * x.w;
    for n in 0..x.n {
        let base = (n * x.c + c) * spatial;
        for i in 0..spatial {
            f(base + i, x.data[base + i]);
        }
    }
}

/// `y = gamma * (x - mean) / sqrt(var + eps) + beta`; per-channel statistics
/// (biased variance) saved for the backward pass. Reductions accumulate in
/// f64 sequentially per channel, parallel only across channels.
pub fn batchnorm_forward<T: Real>(
    x: &Tensor4<T>,
    state: &mut BatchNormState<T>,
    workers: usize,
) -> Result<Tensor4<T>> {
    state.validate(x.c)?;
    let m = x.n * x.h * x.w;
    if m < 2 {
        return Err(Error::InvalidInput(
            "batchnorm needs at least 2 elements per channel".to_string(),
        ));
    }
    let stats = par_map_blocks(workers, x.c, 1, |_, channels| {
        let mut out = Vec::new();
        for c in channels {
            let mut sum = 0.0f64;
            let mut sum2 = 0.0f64;
            for_channel(x, c, |_, v| {
                sum += v.as_f64();
                sum2 += v.as_f64() * v.as_f64();
            });
            let mean = sum / m as f64;
            let var = (sum2 / m as f64 - mean * mean).max(0.0);
            out.push((mean, var));
        }
        out
    });
    let flat: Vec<(f64, f64)> = stats.into_iter().flatten().collect();
    for (c, (mean, var)) in flat.iter().enumerate() {
        state.saved_mean[c] = T::from_f64(*mean);
        state.saved_invstd[c] = T::from_f64(1.0 / (var + state.epsilon.as_f64()).sqrt());
    }
    let mut y = Tensor4::zeros(x.n, x.c, x.h, x.w);
    {
        let out = crate::parallel::SharedSlice::new(&mut y.data);
        par_map_blocks(workers, x.c, 1, |_, channels| {
            for c in channels {
                let mean = state.saved_mean[c];
                let invstd = state.saved_invstd[c];
                let gamma = state.gamma[c];
                let beta = state.beta[c];
                for_channel(x, c, |idx, v| {
                    unsafe { out.set(idx, gamma * (v - mean) * invstd + beta) };
                });
            }
        });
    }
    Ok(y)
}

/// Standard chain-rule gradients:
/// `dx = (gamma * invstd / m) * (m*dy - dbeta - xhat * dgamma)`.
pub fn batchnorm_backward<T: Real>(
    x: &Tensor4<T>,
    state: &BatchNormState<T>,
    dy: &Tensor4<T>,
    workers: usize,
) -> Result<(Tensor4<T>, Vec<T>, Vec<T>)> {
    state.validate(x.c)?;
    if !x.same_shape(dy) {
        return Err(Error::InvalidInput(
            "batchnorm_backward: shape mismatch".to_string(),
        ));
    }
    let m = (x.n * x.h * x.w) as f64;
    let mut dx = Tensor4::zeros(x.n, x.c, x.h, x.w);
    let mut dgamma = vec![T::zero(); x.c];
    let mut dbeta = vec![T::zero(); x.c];
    {
        let dx_out = crate::parallel::SharedSlice::new(&mut dx.data);
        let dgamma_out = crate::parallel::SharedSlice::new(&mut dgamma);
        let dbeta_out = crate::parallel::SharedSlice::new(&mut dbeta);
        par_map_blocks(workers, x.c, 1, |_, channels| {
            for c in channels {
                let mean = state.saved_mean[c].as_f64();
                let invstd = state.saved_invstd[c].as_f64();
                let gamma = state.gamma[c].as_f64();
                let mut sum_dy = 0.0f64;
                let mut sum_dy_xhat = 0.0f64;
                for_channel(x, c, |idx, v| {
                    let xhat = (v.as_f64() - mean) * invstd;
                    let g = dy.data[idx].as_f64();
                    sum_dy += g;
                    sum_dy_xhat += g * xhat;
                });
                for_channel(x, c, |idx, v| {
                    let xhat = (v.as_f64() - mean) * invstd;
                    let g = dy.data[idx].as_f64();
                    let val = (gamma * invstd / m) * (m * g - sum_dy - xhat * sum_dy_xhat);
                    unsafe { dx_out.set(idx, T::from_f64(val)) };
                });
                unsafe {
                    dgamma_out.set(c, T::from_f64(sum_dy_xhat));
                    dbeta_out.set(c, T::from_f64(sum_dy));
                }
            }
        });
    }
    Ok((dx, dgamma, dbeta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn unit_gamma_zero_beta_normalizes() {
        let mut rng = CounterRng::new(1, "bn-test");
        let x: Tensor4<f64> = Tensor4::random(4, 3, 6, 6, &mut rng, -3.0, 9.0);
        let mut state = BatchNormState::new(3, 1e-8);
        let y = batchnorm_forward(&x, &mut state, 2).unwrap();
        let m = (4 * 6 * 6) as f64;
        let spatial = 36;
        for c in 0..3 {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for n in 0..4 {
                for i in 0..spatial {
                    let v = y.data[(n * 3 + c) * spatial + i];
                    sum += v;
                    sum2 += v * v;
                }
            }
            let mean = sum / m;
            let var = sum2 / m - mean * mean;
            assert!(mean.abs() <= 1e-6, "channel {c} mean {mean}");
            assert!((var - 1.0).abs() <= 1e-4, "channel {c} variance {var}");
        }
    }

    #[test]
    fn constant_channel_maps_to_beta() {
        let x: Tensor4<f64> = Tensor4::from_vec(2, 1, 2, 2, vec![5.0; 8]);
        let mut state = BatchNormState::new(1, 1e-5);
        state.beta[0] = 0.75;
        let y = batchnorm_forward(&x, &mut state, 1).unwrap();
        for &v in &y.data {
            assert!((v - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_reduction_size_is_an_error() {
        let x: Tensor4<f64> = Tensor4::zeros(1, 2, 1, 1);
        let mut state = BatchNormState::new(2, 1e-5);
        assert!(batchnorm_forward(&x, &mut state, 1).is_err());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let mut rng = CounterRng::new(2, "bn-test");
        let x: Tensor4<f32> = Tensor4::random(2, 5, 4, 4, &mut rng, -1.0, 1.0);
        let mut s1 = BatchNormState::new(5, 1e-5);
        let mut s4 = BatchNormState::new(5, 1e-5);
        let y1 = batchnorm_forward(&x, &mut s1, 1).unwrap();
        let y4 = batchnorm_forward(&x, &mut s4, 4).unwrap();
        assert_eq!(y1.checksum(), y4.checksum());
    }
}
