//! Central-difference gradient verification.
//!
//! The oracle only ever calls layer *forward* passes: for a scalar loss
//! `L(x) = sum_i w_i * layer(x)_i` with fixed random weights, the numeric
//! gradient `(L(x+h e_i) - L(x - h e_i)) / 2h` is compared elementwise
//! against the analytic backward pass. An element passes when
//! `|analytic - numeric| <= max(rel_tol * max(|analytic|, |numeric|), 1e-8)`.

use crate::level1::gemm::Matrix;
use crate::rng::CounterRng;

use super::batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormState};
use super::composite::{composite_forward_backward, composite_probe};
use super::connected::{connected_backward, connected_forward};
use super::conv::{conv_backward, conv_forward, ConvParams};
use super::layers::{
    avgpool_backward, avgpool_forward, dropout_backward, dropout_forward, lrn_backward,
    lrn_forward, relu_backward, relu_forward, softmax_backward, softmax_forward, LrnParams,
};
use super::tensor::Tensor4;

pub const STEP: f64 = 1e-5;
pub const ABS_FLOOR: f64 = 1e-8;

/// Numeric gradient of `loss` at `x0` by central differences.
pub fn central_difference(loss: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x0.to_vec();
    let mut grad = vec![0.0; x0.len()];
    for i in 0..x0.len() {
        let original = probe[i];
        probe[i] = original + step;
        let plus = loss(&probe);
        probe[i] = original - step;
        let minus = loss(&probe);
        probe[i] = original;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Worst ratio of |analytic - numeric| to its allowance; <= 1 passes.
fn worst_ratio(analytic: &[f64], numeric: &[f64], rel_tol: f64) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut index = 0;
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let allowed = (rel_tol * a.abs().max(n.abs())).max(ABS_FLOOR);
        let ratio = (a - n).abs() / allowed;
        if ratio > worst {
            worst = ratio;
            index = i;
        }
    }
    (worst, index)
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub checked: usize,
    /// Largest error as a fraction of its allowance (<= 1 means pass).
    pub worst: f64,
}

fn check_block(
    name: &str,
    analytic: &[f64],
    numeric: &[f64],
    rel_tol: f64,
    report: &mut GradReport,
) -> Result<(), String> {
    assert_eq!(analytic.len(), numeric.len());
    let (worst, index) = worst_ratio(analytic, numeric, rel_tol);
    report.checked += analytic.len();
    report.worst = report.worst.max(worst);
    if worst > 1.0 {
        return Err(format!(
            "{name}[{index}]: analytic {} vs numeric {} exceeds tolerance {rel_tol}",
            analytic[index], numeric[index]
        ));
    }
    Ok(())
}

/// Random weights defining the scalar loss `sum w_i * out_i`.
fn loss_weights(len: usize, rng: &mut CounterRng) -> Vec<f64> {
    (0..len).map(|_| rng.next_f64() * 2.0 - 1.0).collect()
}

fn weighted_sum(out: &[f64], weights: &[f64]) -> f64 {
    out.iter().zip(weights).map(|(o, w)| o * w).sum()
}

/// Random values with |v| >= margin (keeps ReLU kinks away from FD probes).
fn random_away_from_zero(len: usize, margin: f64, rng: &mut CounterRng) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let magnitude = margin + rng.next_f64();
            if rng.next_u64() & 1 == 0 {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Activation,
    Pooling,
    Batchnorm,
    Connected,
    Convolution,
    Dropout,
    Softmax,
    Lrn,
    Composite,
}

pub const ALL_LAYERS: [LayerKind; 9] = [
    LayerKind::Activation,
    LayerKind::Pooling,
    LayerKind::Batchnorm,
    LayerKind::Connected,
    LayerKind::Convolution,
    LayerKind::Dropout,
    LayerKind::Softmax,
    LayerKind::Lrn,
    LayerKind::Composite,
];

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Activation => "activation",
            LayerKind::Pooling => "pooling",
            LayerKind::Batchnorm => "batchnorm",
            LayerKind::Connected => "connected",
            LayerKind::Convolution => "convolution",
            LayerKind::Dropout => "dropout",
            LayerKind::Softmax => "softmax",
            LayerKind::Lrn => "lrn",
            LayerKind::Composite => "composite",
        }
    }
}

/// Verifies every gradient the layer's backward pass produces against
/// central finite differences on a small f64 tensor.
pub fn check_layer_gradients(
    kind: LayerKind,
    seed: u64,
    rel_tol: f64,
) -> Result<GradReport, String> {
    let mut rng = CounterRng::new(seed, "gradcheck").split(kind as u64);
    let mut report = GradReport {
        checked: 0,
        worst: 0.0,
    };
    match kind {
        LayerKind::Activation => {
            let shape = (2usize, 3usize, 5usize, 5usize);
            let x0 = random_away_from_zero(150, 0.1, &mut rng);
            let weights = loss_weights(150, &mut rng);
            let dy = Tensor4::from_vec(shape.0, shape.1, shape.2, shape.3, weights.clone());
            let x = Tensor4::from_vec(shape.0, shape.1, shape.2, shape.3, x0.clone());
            let analytic = relu_backward(&x, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss = |v: &[f64]| {
                let t = Tensor4::from_vec(shape.0, shape.1, shape.2, shape.3, v.to_vec());
                weighted_sum(&relu_forward(&t, 1).data, &weights)
            };
            let numeric = central_difference(&mut loss, &x0, STEP);
            check_block("relu dx", &analytic.data, &numeric, rel_tol, &mut report)?;
        }
        LayerKind::Pooling => {
            let (n, c, h, w) = (2, 3, 6, 6);
            let mut x0 = vec![0.0; n * c * h * w];
            rng.fill_f64(&mut x0, -1.0, 1.0);
            let x = Tensor4::from_vec(n, c, h, w, x0.clone());
            let y = avgpool_forward(&x, 2, 2, 1).map_err(|e| e.to_string())?;
            let weights = loss_weights(y.len(), &mut rng);
            let dy = Tensor4::from_vec(y.n, y.c, y.h, y.w, weights.clone());
            let analytic = avgpool_backward(&x, &dy, 2, 2, 1).map_err(|e| e.to_string())?;
            let mut loss = |v: &[f64]| {
                let t = Tensor4::from_vec(n, c, h, w, v.to_vec());
                weighted_sum(&avgpool_forward(&t, 2, 2, 1).unwrap().data, &weights)
            };
            let numeric = central_difference(&mut loss, &x0, STEP);
            check_block("avgpool dx", &analytic.data, &numeric, rel_tol, &mut report)?;
        }
        LayerKind::Batchnorm => {
            let (n, c, h, w) = (2, 3, 5, 5);
            let mut x0 = vec![0.0; n * c * h * w];
            rng.fill_f64(&mut x0, -1.0, 2.0);
            let mut gamma0 = vec![0.0; c];
            rng.fill_f64(&mut gamma0, 0.5, 1.5);
            let mut beta0 = vec![0.0; c];
            rng.fill_f64(&mut beta0, -0.5, 0.5);
            let weights = loss_weights(n * c * h * w, &mut rng);
            let forward = |xv: &[f64], gv: &[f64], bv: &[f64]| {
                let x = Tensor4::from_vec(n, c, h, w, xv.to_vec());
                let mut state: BatchNormState<f64> = BatchNormState::new(c, 1e-5);
                state.gamma = gv.to_vec();
                state.beta = bv.to_vec();
                batchnorm_forward(&x, &mut state, 1).unwrap()
            };
            // analytic
            let x = Tensor4::from_vec(n, c, h, w, x0.clone());
            let mut state: BatchNormState<f64> = BatchNormState::new(c, 1e-5);
            state.gamma = gamma0.clone();
            state.beta = beta0.clone();
            let _ = batchnorm_forward(&x, &mut state, 1).map_err(|e| e.to_string())?;
            let dy = Tensor4::from_vec(n, c, h, w, weights.clone());
            let (dx, dgamma, dbeta) =
                batchnorm_backward(&x, &state, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss_x = |v: &[f64]| weighted_sum(&forward(v, &gamma0, &beta0).data, &weights);
            let numeric_x = central_difference(&mut loss_x, &x0, STEP);
            check_block("batchnorm dx", &dx.data, &numeric_x, rel_tol, &mut report)?;
            let mut loss_g = |v: &[f64]| weighted_sum(&forward(&x0, v, &beta0).data, &weights);
            let numeric_g = central_difference(&mut loss_g, &gamma0, STEP);
            check_block(
                "batchnorm dgamma",
                &dgamma,
                &numeric_g,
                rel_tol,
                &mut report,
            )?;
            let mut loss_b = |v: &[f64]| weighted_sum(&forward(&x0, &gamma0, v).data, &weights);
            let numeric_b = central_difference(&mut loss_b, &beta0, STEP);
            check_block("batchnorm dbeta", &dbeta, &numeric_b, rel_tol, &mut report)?;
        }
        LayerKind::Connected => {
            let (batch, inputs, outputs) = (4, 6, 3);
            let mut x0 = vec![0.0; batch * inputs];
            rng.fill_f64(&mut x0, -1.0, 1.0);
            let mut w0 = vec![0.0; inputs * outputs];
            rng.fill_f64(&mut w0, -1.0, 1.0);
            let mut b0 = vec![0.0; outputs];
            rng.fill_f64(&mut b0, -0.5, 0.5);
            let weights = loss_weights(batch * outputs, &mut rng);
            let forward = |xv: &[f64], wv: &[f64], bv: &[f64]| {
                let x = Matrix {
                    rows: batch,
                    cols: inputs,
                    data: xv.to_vec(),
                };
                let w = Matrix {
                    rows: inputs,
                    cols: outputs,
                    data: wv.to_vec(),
                };
                connected_forward(&x, &w, bv, 1).unwrap()
            };
            let x = Matrix {
                rows: batch,
                cols: inputs,
                data: x0.clone(),
            };
            let w = Matrix {
                rows: inputs,
                cols: outputs,
                data: w0.clone(),
            };
            let dy = Matrix {
                rows: batch,
                cols: outputs,
                data: weights.clone(),
            };
            let (dx, dw, dbias) = connected_backward(&x, &w, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss_x = |v: &[f64]| weighted_sum(&forward(v, &w0, &b0).data, &weights);
            let numeric_x = central_difference(&mut loss_x, &x0, STEP);
            check_block("connected dx", &dx.data, &numeric_x, rel_tol, &mut report)?;
            let mut loss_w = |v: &[f64]| weighted_sum(&forward(&x0, v, &b0).data, &weights);
            let numeric_w = central_difference(&mut loss_w, &w0, STEP);
            check_block("connected dw", &dw.data, &numeric_w, rel_tol, &mut report)?;
            let mut loss_b = |v: &[f64]| weighted_sum(&forward(&x0, &w0, v).data, &weights);
            let numeric_b = central_difference(&mut loss_b, &b0, STEP);
            check_block("connected dbias", &dbias, &numeric_b, rel_tol, &mut report)?;
        }
        LayerKind::Convolution => {
            let (n, c, h, w) = (2, 3, 8, 8);
            let (oc, k) = (4, 3);
            let mut x0 = vec![0.0; n * c * h * w];
            rng.fill_f64(&mut x0, -1.0, 1.0);
            let params: ConvParams<f64> = ConvParams::random(oc, c, k, 1, 1, &mut rng);
            let w0 = params.weights.data.clone();
            let b0 = params.bias.clone();
            let forward = |xv: &[f64], wv: &[f64], bv: &[f64]| {
                let x = Tensor4::from_vec(n, c, h, w, xv.to_vec());
                let p = ConvParams {
                    weights: Tensor4::from_vec(oc, c, k, k, wv.to_vec()),
                    bias: bv.to_vec(),
                    stride: 1,
                    padding: 1,
                };
                conv_forward(&x, &p, 1).unwrap()
            };
            let x = Tensor4::from_vec(n, c, h, w, x0.clone());
            let y = conv_forward(&x, &params, 1).map_err(|e| e.to_string())?;
            let weights = loss_weights(y.len(), &mut rng);
            let dy = Tensor4::from_vec(y.n, y.c, y.h, y.w, weights.clone());
            let (dx, dw, dbias) = conv_backward(&x, &params, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss_x = |v: &[f64]| weighted_sum(&forward(v, &w0, &b0).data, &weights);
            let numeric_x = central_difference(&mut loss_x, &x0, STEP);
            check_block("conv dx", &dx.data, &numeric_x, rel_tol, &mut report)?;
            let mut loss_w = |v: &[f64]| weighted_sum(&forward(&x0, v, &b0).data, &weights);
            let numeric_w = central_difference(&mut loss_w, &w0, STEP);
            check_block("conv dw", &dw.data, &numeric_w, rel_tol, &mut report)?;
            let mut loss_b = |v: &[f64]| weighted_sum(&forward(&x0, &w0, v).data, &weights);
            let numeric_b = central_difference(&mut loss_b, &b0, STEP);
            check_block("conv dbias", &dbias, &numeric_b, rel_tol, &mut report)?;
        }
        LayerKind::Dropout => {
            let (n, c, h, w) = (2, 3, 5, 5);
            let mut x0 = vec![0.0; n * c * h * w];
            rng.fill_f64(&mut x0, -1.0, 1.0);
            let weights = loss_weights(n * c * h * w, &mut rng);
            let keep = 0.6;
            let mask_seed = 1234;
            let x = Tensor4::from_vec(n, c, h, w, x0.clone());
            let (_, mask) = dropout_forward(&x, keep, mask_seed, 1).map_err(|e| e.to_string())?;
            let dy = Tensor4::from_vec(n, c, h, w, weights.clone());
            let analytic = dropout_backward(&mask, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss = |v: &[f64]| {
                let t = Tensor4::from_vec(n, c, h, w, v.to_vec());
                let (y, _) = dropout_forward(&t, keep, mask_seed, 1).unwrap();
                weighted_sum(&y.data, &weights)
            };
            let numeric = central_difference(&mut loss, &x0, STEP);
            check_block("dropout dx", &analytic.data, &numeric, rel_tol, &mut report)?;
        }
        LayerKind::Softmax => {
            let (n, c, h, w) = (2, 4, 3, 3);
            let mut z0 = vec![0.0; n * c * h * w];
            rng.fill_f64(&mut z0, -2.0, 2.0);
            let weights = loss_weights(n * c * h * w, &mut rng);
            let z = Tensor4::from_vec(n, c, h, w, z0.clone());
            let y = softmax_forward(&z, 1);
            let dy = Tensor4::from_vec(n, c, h, w, weights.clone());
            let analytic = softmax_backward(&y, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss = |v: &[f64]| {
                let t = Tensor4::from_vec(n, c, h, w, v.to_vec());
                weighted_sum(&softmax_forward(&t, 1).data, &weights)
            };
            let numeric = central_difference(&mut loss, &z0, STEP);
            check_block("softmax dz", &analytic.data, &numeric, rel_tol, &mut report)?;
        }
        LayerKind::Lrn => {
            let (n, c, h, w) = (2, 5, 4, 4);
            let mut a0 = vec![0.0; n * c * h * w];
            rng.fill_f64(&mut a0, -1.0, 1.0);
            let weights = loss_weights(n * c * h * w, &mut rng);
            let params = LrnParams {
                n_neighborhood: 3,
                k: 2.0,
                alpha: 0.05,
                beta: 0.75,
            };
            let a = Tensor4::from_vec(n, c, h, w, a0.clone());
            let dy = Tensor4::from_vec(n, c, h, w, weights.clone());
            let analytic = lrn_backward(&a, &params, &dy, 1).map_err(|e| e.to_string())?;
            let mut loss = |v: &[f64]| {
                let t = Tensor4::from_vec(n, c, h, w, v.to_vec());
                weighted_sum(&lrn_forward(&t, &params, 1).unwrap().data, &weights)
            };
            let numeric = central_difference(&mut loss, &a0, STEP);
            check_block("lrn dx", &analytic.data, &numeric, rel_tol, &mut report)?;
        }
        LayerKind::Composite => {
            let (net, x) = composite_probe(seed);
            let x0 = x.data.clone();
            let mut net_a = net.clone();
            let out = composite_forward_backward(&mut net_a, &x, 1).map_err(|e| e.to_string())?;
            let mut loss = |v: &[f64]| {
                let t = Tensor4::from_vec(x.n, x.c, x.h, x.w, v.to_vec());
                let mut net_c = net.clone();
                composite_forward_backward(&mut net_c, &t, 1).unwrap().loss
            };
            let numeric = central_difference(&mut loss, &x0, STEP);
            check_block(
                "composite d(input)",
                &out.input_grad.data,
                &numeric,
                rel_tol,
                &mut report,
            )?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_matches_analytic_quadratic() {
        // f(x) = sum x_i^2 has gradient 2x
        let x0 = [1.0, -2.0, 0.5];
        let mut f = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let grad = central_difference(&mut f, &x0, 1e-6);
        for (g, x) in grad.iter().zip(&x0) {
            assert!((g - 2.0 * x).abs() < 1e-8);
        }
    }

    #[test]
    fn every_layer_passes_its_gradient_check() {
        for kind in ALL_LAYERS {
            let report = check_layer_gradients(kind, 42, 1e-5)
                .unwrap_or_else(|e| panic!("{}: {e}", kind.name()));
            assert!(report.checked > 0, "{} checked nothing", kind.name());
        }
    }

    #[test]
    fn a_broken_gradient_is_caught() {
        // sanity-check the checker itself: sign-flipped analytic gradient
        let x0 = [0.7, -0.3];
        let mut f = |v: &[f64]| v[0] * v[0] + v[1];
        let numeric = central_difference(&mut f, &x0, 1e-6);
        let wrong = [-1.4, 1.0];
        let (worst, _) = super::worst_ratio(&wrong, &numeric, 1e-5);
        assert!(worst > 1.0);
    }
}
