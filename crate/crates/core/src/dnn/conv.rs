//! Direct 2-D cross-correlation (convolution layer) with zero padding.

use crate::error::{Error, Result};
use crate::parallel::{par_map_blocks, SharedSlice};
use crate::real::Real;
use crate::rng::CounterRng;

use super::tensor::Tensor4;

#[derive(Debug, Clone)]
pub struct ConvParams<T> {
    /// (out_channels, in_channels, kernel_h, kernel_w).
    pub weights: Tensor4<T>,
    pub bias: Vec<T>,
    pub stride: usize,
    pub padding: usize,
}

impl<T: Real> ConvParams<T> {
    pub fn random(
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut CounterRng,
    ) -> ConvParams<T> {
        let scale = 1.0 / ((in_channels * kernel * kernel) as f64).sqrt();
        ConvParams {
            weights: Tensor4::random(
                out_channels,
                in_channels,
                kernel,
                kernel,
                rng,
                -scale,
                scale,
            ),
            bias: (0..out_channels)
                .map(|_| T::from_f64(0.1 * (rng.next_f64() - 0.5)))
                .collect(),
            stride,
            padding,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.weights.n
    }
}

/// Output spatial dimensions for `x` under `p` (floor semantics).
pub fn conv_output_dims<T: Real>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<(usize, usize)> {
    if p.stride == 0 {
        return Err(Error::InvalidInput("stride must be >= 1".to_string()));
    }
    if p.weights.c != x.c {
        return Err(Error::InvalidInput(format!(
            "kernel expects {} input channels, tensor has {}",
            p.weights.c, x.c
        )));
    }
    if p.bias.len() != p.weights.n {
        return Err(Error::InvalidInput(
            "bias length != out_channels".to_string(),
        ));
    }
    let (kh, kw) = (p.weights.h, p.weights.w);
    let padded_h = x.h + 2 * p.padding;
    let padded_w = x.w + 2 * p.padding;
    if padded_h < kh || padded_w < kw {
        return Err(Error::InvalidInput(format!(
            "kernel {kh}x{kw} larger than padded input {padded_h}x{padded_w}"
        )));
    }
    Ok((
        (padded_h - kh) / p.stride + 1,
        (padded_w - kw) / p.stride + 1,
    ))
}

/// `y[n,o,i,j] = bias[o] + sum_{c,u,v} x[n,c,i*s+u-pad, j*s+v-pad] * W[o,c,u,v]`
/// with zeros outside bounds; parallel over (batch, out-channel) planes.
pub fn conv_forward<T: Real>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    workers: usize,
) -> Result<Tensor4<T>> {
    let (oh, ow) = conv_output_dims(x, p)?;
    let oc = p.out_channels();
    let (kh, kw) = (p.weights.h, p.weights.w);
    let mut y = Tensor4::zeros(x.n, oc, oh, ow);
    {
        let out = SharedSlice::new(&mut y.data);
        par_map_blocks(workers, x.n * oc, 1, |_, planes| {
            for plane in planes {
                let (n, o) = (plane / oc, plane % oc);
                for i in 0..oh {
                    for j in 0..ow {
                        let mut acc = p.bias[o];
                        for c in 0..x.c {
                            for u in 0..kh {
                                let row = (i * p.stride + u) as isize - p.padding as isize;
                                if row < 0 || row >= x.h as isize {
                                    continue;
                                }
                                for v in 0..kw {
                                    let col = (j * p.stride + v) as isize - p.padding as isize;
                                    if col < 0 || col >= x.w as isize {
                                        continue;
                                    }
                                    acc += x.at(n, c, row as usize, col as usize)
                                        * p.weights.at(o, c, u, v);
                                }
                            }
                        }
                        unsafe { out.set(((n * oc + o) * oh + i) * ow + j, acc) };
                    }
                }
            }
        });
    }
    Ok(y)
}

/// Gradients w.r.t. input (transposed correlation), weights, and bias.
pub fn conv_backward<T: Real>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    dy: &Tensor4<T>,
    workers: usize,
) -> Result<(Tensor4<T>, Tensor4<T>, Vec<T>)> {
    let (oh, ow) = conv_output_dims(x, p)?;
    let oc = p.out_channels();
    if dy.shape() != (x.n, oc, oh, ow) {
        return Err(Error::InvalidInput(
            "conv_backward: bad dy shape".to_string(),
        ));
    }
    let (kh, kw) = (p.weights.h, p.weights.w);

    // dx: parallel over batch entries, accumulation order fixed inside each.
    let mut dx = Tensor4::zeros(x.n, x.c, x.h, x.w);
    {
        let out = SharedSlice::new(&mut dx.data);
        let image = x.c * x.h * x.w;
        par_map_blocks(workers, x.n, 1, |_, batch| {
            let mut local = vec![T::zero(); image];
            for n in batch {
                local.fill(T::zero());
                for o in 0..oc {
                    for i in 0..oh {
                        for j in 0..ow {
                            let g = dy.at(n, o, i, j);
                            for c in 0..x.c {
                                for u in 0..kh {
                                    let row = (i * p.stride + u) as isize - p.padding as isize;
                                    if row < 0 || row >= x.h as isize {
                                        continue;
                                    }
                                    for v in 0..kw {
                                        let col = (j * p.stride + v) as isize - p.padding as isize;
                                        if col < 0 || col >= x.w as isize {
                                            continue;
                                        }
                                        local[(c * x.h + row as usize) * x.w + col as usize] +=
                                            g * p.weights.at(o, c, u, v);
                                    }
                                }
                            }
                        }
                    }
                }
                for (k, &v) in local.iter().enumerate() {
                    unsafe { out.set(n * image + k, v) };
                }
            }
        });
    }

    // dW and dbias: parallel over output channels.
    let mut dw = Tensor4::zeros(oc, x.c, kh, kw);
    let mut dbias = vec![T::zero(); oc];
    {
        let dw_out = SharedSlice::new(&mut dw.data);
        let db_out = SharedSlice::new(&mut dbias);
        let kernel = x.c * kh * kw;
        par_map_blocks(workers, oc, 1, |_, out_channels| {
            let mut local = vec![T::zero(); kernel];
            for o in out_channels {
                local.fill(T::zero());
                let mut bias_acc = T::zero();
                for n in 0..x.n {
                    for i in 0..oh {
                        for j in 0..ow {
                            let g = dy.at(n, o, i, j);
                            bias_acc += g;
                            for c in 0..x.c {
                                for u in 0..kh {
                                    let row = (i * p.stride + u) as isize - p.padding as isize;
                                    if row < 0 || row >= x.h as isize {
                                        continue;
                                    }
                                    for v in 0..kw {
                                        let col = (j * p.stride + v) as isize - p.padding as isize;
                                        if col < 0 || col >= x.w as isize {
                                            continue;
                                        }
                                        local[(c * kh + u) * kw + v] +=
                                            g * x.at(n, c, row as usize, col as usize);
                                    }
                                }
                            }
                        }
                    }
                }
                for (k, &v) in local.iter().enumerate() {
                    unsafe { dw_out.set(o * kernel + k, v) };
                }
                unsafe { db_out.set(o, bias_acc) };
            }
        });
    }
    Ok((dx, dw, dbias))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = CounterRng::new(1, "conv-test");
        let x: Tensor4<f64> = Tensor4::random(2, 1, 5, 5, &mut rng, -1.0, 1.0);
        let p = ConvParams {
            weights: Tensor4::from_vec(1, 1, 1, 1, vec![1.0]),
            bias: vec![0.0],
            stride: 1,
            padding: 0,
        };
        let y = conv_forward(&x, &p, 2).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn paper_geometry_three_by_three_kernel() {
        // 228x228 input, 3 channels, 3x3 kernel, stride 1, no padding
        // -> 226x226 single-channel output.
        let x: Tensor4<f32> = Tensor4::zeros(1, 3, 228, 228);
        let mut rng = CounterRng::new(2, "conv-test");
        let p: ConvParams<f32> = ConvParams::random(1, 3, 3, 1, 0, &mut rng);
        let (oh, ow) = conv_output_dims(&x, &p).unwrap();
        assert_eq!((oh, ow), (226, 226));
    }

    #[test]
    fn padding_keeps_spatial_dims() {
        let x: Tensor4<f64> = Tensor4::zeros(1, 2, 8, 8);
        let mut rng = CounterRng::new(3, "conv-test");
        let p: ConvParams<f64> = ConvParams::random(4, 2, 3, 1, 1, &mut rng);
        assert_eq!(conv_output_dims(&x, &p).unwrap(), (8, 8));
    }

    #[test]
    fn invalid_geometry_is_an_error() {
        let x: Tensor4<f64> = Tensor4::zeros(1, 2, 2, 2);
        let mut rng = CounterRng::new(4, "conv-test");
        let p: ConvParams<f64> = ConvParams::random(1, 2, 5, 1, 0, &mut rng);
        assert!(conv_output_dims(&x, &p).is_err());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let mut rng = CounterRng::new(5, "conv-test");
        let x: Tensor4<f32> = Tensor4::random(2, 3, 9, 9, &mut rng, -1.0, 1.0);
        let p: ConvParams<f32> = ConvParams::random(4, 3, 3, 2, 1, &mut rng);
        let y1 = conv_forward(&x, &p, 1).unwrap();
        let y4 = conv_forward(&x, &p, 4).unwrap();
        assert_eq!(y1.checksum(), y4.checksum());
    }
}
