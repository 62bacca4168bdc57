//! Harness adapters for the DNN layer benchmarks.
//!
//! Every layer benchmark runs forward, backward, or both per pass
//! (`--param pass=`), in f32 or f64 (`--param precision=`). Verification is
//! precision-independent: a small f64 probe of the same layer goes through
//! the central-finite-difference check, plus layer-specific output
//! invariants on the benchmark-size tensors.

use crate::error::{Error, Result};
use crate::harness::{Benchmark, BenchmarkDescriptor, Instance, VerifyOutcome};
use crate::level1::gemm::Matrix;
use crate::params::{param_set, ParamSet, ParamSetExt, ParamSpec, ParamValue};
use crate::real::Real;
use crate::rng::CounterRng;
use crate::util::ensure_memory;

use super::batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormState};
use super::composite::{composite_forward_backward, composite_net, CompositeNet, CompositeOutput};
use super::connected::{connected_backward, connected_forward};
use super::conv::{conv_backward, conv_forward, conv_output_dims, ConvParams};
use super::gradcheck::{check_layer_gradients, LayerKind};
use super::layers::{
    avgpool_backward, avgpool_forward, dropout_backward, dropout_forward, lrn_backward,
    lrn_forward, relu_backward, relu_forward, softmax_backward, softmax_forward, DropoutMask,
    LrnParams,
};
use super::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PassMode {
    Forward,
    Backward,
    Both,
}

impl PassMode {
    fn parse(params: &ParamSet) -> Result<PassMode> {
        match params.str("pass")? {
            "forward" => Ok(PassMode::Forward),
            "backward" => Ok(PassMode::Backward),
            "both" => Ok(PassMode::Both),
            other => Err(Error::invalid_param("pass", format!("`{other}`"))),
        }
    }
}

fn mode_spec() -> ParamSpec {
    ParamSpec::choice(
        "pass",
        &["forward", "backward", "both"],
        "which passes to time",
    )
}

fn precision_spec() -> ParamSpec {
    ParamSpec::choice("precision", &["f32", "f64"], "element type")
}

fn batch_for_class(class: i64) -> ParamValue {
    (8i64 << class).into()
}

/// Shared FD verification: the analytic backward of a small f64 probe must
/// match central differences at 1e-5 relative.
fn gradcheck_outcome(kind: LayerKind, seed: u64, extra: String) -> VerifyOutcome {
    match check_layer_gradients(kind, seed, 1e-5) {
        Ok(report) => VerifyOutcome::pass(format!(
            "{} FD-checked gradients within 1e-5 (worst {:.3} of allowance); {extra}",
            report.checked, report.worst
        )),
        Err(detail) => VerifyOutcome::fail(format!("finite-difference check failed: {detail}")),
    }
}

macro_rules! dispatch_precision {
    ($params:expr, $ty32:ty, $ty64:ty, $ctor:expr) => {{
        let f64_mode = $params.str("precision")? == "f64";
        if f64_mode {
            let instance: $ty64 = $ctor;
            Ok(Box::new(instance) as Box<dyn Instance>)
        } else {
            let instance: $ty32 = $ctor;
            Ok(Box::new(instance) as Box<dyn Instance>)
        }
    }};
}

// ── Activation (ReLU) ────────────────────────────────────────────────────

pub struct ActivationBenchmark;

impl Benchmark for ActivationBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-activation".to_string(),
            level: 2,
            dwarf: Some("unstructured grid".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 4096, "channels"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 3.into()),
                    ("h", 224.into()),
                    ("w", 224.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        ensure_memory((n * c * h * w) as u64 * 8 * 4)?;
        let mode = PassMode::parse(params)?;
        dispatch_precision!(params, ActivationInstance<f32>, ActivationInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-activation");
            ActivationInstance {
                x: Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0),
                dy: Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0),
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

fn tensor_dims(params: &ParamSet) -> Result<(usize, usize, usize, usize)> {
    Ok((
        params.usize("n")?,
        params.usize("c")?,
        params.usize("h")?,
        params.usize("w")?,
    ))
}

struct ActivationInstance<T> {
    x: Tensor4<T>,
    dy: Tensor4<T>,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

impl<T: Real> Instance for ActivationInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => relu_forward(&self.x, self.workers).checksum(),
            PassMode::Backward => relu_backward(&self.x, &self.dy, self.workers)
                .expect("shapes match")
                .checksum(),
            PassMode::Both => {
                let y = relu_forward(&self.x, self.workers);
                let dx = relu_backward(&self.x, &self.dy, self.workers).expect("shapes match");
                y.checksum() ^ dx.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        // output invariant on the benchmark tensor itself
        let y = relu_forward(&self.x, self.workers);
        for (a, b) in self.x.data.iter().zip(&y.data) {
            if *b != a.max(T::zero()) {
                return VerifyOutcome::fail("relu output violates max(0, x)".to_string());
            }
        }
        gradcheck_outcome(
            LayerKind::Activation,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.x.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── Pooling (average) ────────────────────────────────────────────────────

pub struct PoolingBenchmark;

impl Benchmark for PoolingBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-pooling".to_string(),
            level: 2,
            dwarf: Some("dense linear algebra".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 4096, "channels"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                ParamSpec::int("window", 1, 64, "pooling window"),
                ParamSpec::int("stride", 1, 64, "pooling stride"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 16.into()),
                    ("h", 112.into()),
                    ("w", 112.into()),
                    ("window", 2.into()),
                    ("stride", 2.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        let window = params.usize("window")?;
        let stride = params.usize("stride")?;
        ensure_memory((n * c * h * w) as u64 * 8 * 4)?;
        let mode = PassMode::parse(params)?;
        dispatch_precision!(params, PoolingInstance<f32>, PoolingInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-pooling");
            let x: Tensor4<_> = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            let y = avgpool_forward(&x, window, stride, workers)?;
            let dy = Tensor4::random(y.n, y.c, y.h, y.w, &mut rng, -1.0, 1.0);
            PoolingInstance {
                x,
                dy,
                window,
                stride,
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

struct PoolingInstance<T> {
    x: Tensor4<T>,
    dy: Tensor4<T>,
    window: usize,
    stride: usize,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

impl<T: Real> Instance for PoolingInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => avgpool_forward(&self.x, self.window, self.stride, self.workers)
                .expect("validated dims")
                .checksum(),
            PassMode::Backward => {
                avgpool_backward(&self.x, &self.dy, self.window, self.stride, self.workers)
                    .expect("validated dims")
                    .checksum()
            }
            PassMode::Both => {
                let y = avgpool_forward(&self.x, self.window, self.stride, self.workers)
                    .expect("validated dims");
                let dx =
                    avgpool_backward(&self.x, &self.dy, self.window, self.stride, self.workers)
                        .expect("validated dims");
                y.checksum() ^ dx.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        gradcheck_outcome(
            LayerKind::Pooling,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.x.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── Batch normalization ──────────────────────────────────────────────────

pub struct BatchnormBenchmark;

impl Benchmark for BatchnormBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-batchnorm".to_string(),
            level: 2,
            dwarf: Some("unstructured grid".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 4096, "channels"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 32.into()),
                    ("h", 56.into()),
                    ("w", 56.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        if n * h * w < 2 {
            return Err(Error::invalid_param("n", "batchnorm needs n*h*w >= 2"));
        }
        ensure_memory((n * c * h * w) as u64 * 8 * 4)?;
        let mode = PassMode::parse(params)?;
        dispatch_precision!(params, BatchnormInstance<f32>, BatchnormInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-batchnorm");
            let x: Tensor4<_> = Tensor4::random(n, c, h, w, &mut rng, -2.0, 5.0);
            let dy = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            let mut state = BatchNormState::new(c, 1e-5);
            if mode == PassMode::Backward {
                // backward consumes the statistics saved by a forward pass
                batchnorm_forward(&x, &mut state, workers)?;
            }
            BatchnormInstance {
                x,
                dy,
                state,
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

struct BatchnormInstance<T> {
    x: Tensor4<T>,
    dy: Tensor4<T>,
    state: BatchNormState<T>,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

impl<T: Real> Instance for BatchnormInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => batchnorm_forward(&self.x, &mut self.state, self.workers)
                .expect("validated dims")
                .checksum(),
            PassMode::Backward => {
                let (dx, _, _) = batchnorm_backward(&self.x, &self.state, &self.dy, self.workers)
                    .expect("validated dims");
                dx.checksum()
            }
            PassMode::Both => {
                let y = batchnorm_forward(&self.x, &mut self.state, self.workers)
                    .expect("validated dims");
                let (dx, _, _) = batchnorm_backward(&self.x, &self.state, &self.dy, self.workers)
                    .expect("validated dims");
                y.checksum() ^ dx.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        // with default gamma=1, beta=0 the output must be normalized
        let mut state = BatchNormState::new(self.x.c, 1e-5);
        let y = batchnorm_forward(&self.x, &mut state, self.workers).expect("validated dims");
        let m = (self.x.n * self.x.h * self.x.w) as f64;
        let spatial = self.x.h * self.x.w;
        for c in 0..self.x.c {
            let mut sum = 0.0f64;
            let mut sum2 = 0.0f64;
            for n in 0..self.x.n {
                let base = (n * self.x.c + c) * spatial;
                for i in 0..spatial {
                    let v = y.data[base + i].as_f64();
                    sum += v;
                    sum2 += v * v;
                }
            }
            let mean = sum / m;
            let var = sum2 / m - mean * mean;
            // mean bound widens with element rounding at lower precision
            let mean_bound = 1e-6f64.max(f64::EPSILON.max(T::epsilon().as_f64()) * 8.0);
            if mean.abs() > mean_bound || (var - 1.0).abs() > 1e-4 {
                return VerifyOutcome::fail(format!(
                    "channel {c} not normalized: mean {mean:.3e}, variance {var}"
                ));
            }
        }
        gradcheck_outcome(
            LayerKind::Batchnorm,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.x.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── Connected ────────────────────────────────────────────────────────────

pub struct ConnectedBenchmark;

impl Benchmark for ConnectedBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-connected".to_string(),
            level: 2,
            dwarf: Some("dense linear algebra".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "gflops".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 65536, "batch size"),
                ParamSpec::int("inputs", 1, 65536, "input features"),
                ParamSpec::int("outputs", 1, 65536, "output features"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("inputs", 1024.into()),
                    ("outputs", 1024.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        let inputs = params.usize("inputs")?;
        let outputs = params.usize("outputs")?;
        ensure_memory(((n * inputs + inputs * outputs + n * outputs) as u64) * 8 * 3)?;
        let mode = PassMode::parse(params)?;
        dispatch_precision!(params, ConnectedInstance<f32>, ConnectedInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-connected");
            ConnectedInstance {
                x: Matrix::random(&mut rng, n, inputs, -1.0, 1.0),
                w: Matrix::random(&mut rng, inputs, outputs, -0.1, 0.1),
                bias: (0..outputs)
                    .map(|_| Real::from_f64(rng.next_f64() - 0.5))
                    .collect(),
                dy: Matrix::random(&mut rng, n, outputs, -1.0, 1.0),
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

struct ConnectedInstance<T> {
    x: Matrix<T>,
    w: Matrix<T>,
    bias: Vec<T>,
    dy: Matrix<T>,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

fn matrix_checksum<T: Real>(m: &Matrix<T>) -> u64 {
    let mut hasher = crate::util::Fnv1a::new();
    for v in &m.data {
        v.write_bits(&mut hasher);
    }
    hasher.finish()
}

impl<T: Real> Instance for ConnectedInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => matrix_checksum(
                &connected_forward(&self.x, &self.w, &self.bias, self.workers)
                    .expect("validated dims"),
            ),
            PassMode::Backward => {
                let (dx, dw, _) = connected_backward(&self.x, &self.w, &self.dy, self.workers)
                    .expect("validated dims");
                matrix_checksum(&dx) ^ matrix_checksum(&dw)
            }
            PassMode::Both => {
                let y = connected_forward(&self.x, &self.w, &self.bias, self.workers)
                    .expect("validated dims");
                let (dx, dw, _) = connected_backward(&self.x, &self.w, &self.dy, self.workers)
                    .expect("validated dims");
                matrix_checksum(&y) ^ matrix_checksum(&dx) ^ matrix_checksum(&dw)
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        gradcheck_outcome(
            LayerKind::Connected,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let macs = (self.x.rows * self.x.cols * self.w.cols) as f64;
        let flops = match self.mode {
            PassMode::Forward => 2.0 * macs,
            PassMode::Backward => 4.0 * macs,
            PassMode::Both => 6.0 * macs,
        };
        vec![("gflops".to_string(), flops / compute_seconds / 1e9)]
    }
}

// ── Convolution ──────────────────────────────────────────────────────────

pub struct ConvolutionBenchmark;

impl Benchmark for ConvolutionBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-convolution".to_string(),
            level: 2,
            dwarf: Some("dense linear algebra".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "gflops".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 4096, "input channels"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                ParamSpec::int("filters", 1, 4096, "output channels"),
                ParamSpec::int("kernel", 1, 31, "square kernel size"),
                ParamSpec::int("stride", 1, 16, "stride"),
                ParamSpec::int("pad", 0, 16, "zero padding"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 3.into()),
                    ("h", 96.into()),
                    ("w", 96.into()),
                    ("filters", 16.into()),
                    ("kernel", 3.into()),
                    ("stride", 1.into()),
                    ("pad", 1.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        let filters = params.usize("filters")?;
        let kernel = params.usize("kernel")?;
        ensure_memory((n * (c + filters) * h * w) as u64 * 8 * 3)?;
        let mode = PassMode::parse(params)?;
        let stride = params.usize("stride")?;
        let pad = params.usize("pad")?;
        dispatch_precision!(params, ConvInstance<f32>, ConvInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-convolution");
            let x: Tensor4<_> = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            let conv = ConvParams::random(filters, c, kernel, stride, pad, &mut rng);
            let (oh, ow) = conv_output_dims(&x, &conv)?;
            let dy = Tensor4::random(n, filters, oh, ow, &mut rng, -1.0, 1.0);
            ConvInstance {
                x,
                conv,
                dy,
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

struct ConvInstance<T> {
    x: Tensor4<T>,
    conv: ConvParams<T>,
    dy: Tensor4<T>,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

impl<T: Real> Instance for ConvInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => conv_forward(&self.x, &self.conv, self.workers)
                .expect("validated geometry")
                .checksum(),
            PassMode::Backward => {
                let (dx, dw, _) = conv_backward(&self.x, &self.conv, &self.dy, self.workers)
                    .expect("validated geometry");
                dx.checksum() ^ dw.checksum()
            }
            PassMode::Both => {
                let y =
                    conv_forward(&self.x, &self.conv, self.workers).expect("validated geometry");
                let (dx, dw, _) = conv_backward(&self.x, &self.conv, &self.dy, self.workers)
                    .expect("validated geometry");
                y.checksum() ^ dx.checksum() ^ dw.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        gradcheck_outcome(
            LayerKind::Convolution,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let macs = (self.dy.len() * self.x.c * self.conv.weights.h * self.conv.weights.w) as f64;
        let flops = match self.mode {
            PassMode::Forward => 2.0 * macs,
            PassMode::Backward => 4.0 * macs,
            PassMode::Both => 6.0 * macs,
        };
        vec![("gflops".to_string(), flops / compute_seconds / 1e9)]
    }
}

// ── Dropout ──────────────────────────────────────────────────────────────

pub struct DropoutBenchmark;

impl Benchmark for DropoutBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-dropout".to_string(),
            level: 2,
            dwarf: Some("unstructured grid".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 4096, "channels"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                ParamSpec::float("keep_prob", 1e-9, 1.0, "probability an activation survives"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 3.into()),
                    ("h", 224.into()),
                    ("w", 224.into()),
                    ("keep_prob", 0.5.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        ensure_memory((n * c * h * w) as u64 * 8 * 4)?;
        let mode = PassMode::parse(params)?;
        let keep_prob = params.f64("keep_prob")?;
        dispatch_precision!(params, DropoutInstance<f32>, DropoutInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-dropout");
            let x: Tensor4<_> = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            let dy = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            let mask = DropoutMask::generate(x.len(), keep_prob, seed);
            DropoutInstance {
                x,
                dy,
                mask,
                keep_prob,
                mask_seed: seed,
                mode,
                workers,
                checksum: 0,
            }
        })
    }
}

struct DropoutInstance<T> {
    x: Tensor4<T>,
    dy: Tensor4<T>,
    mask: DropoutMask,
    keep_prob: f64,
    mask_seed: u64,
    mode: PassMode,
    workers: usize,
    checksum: u64,
}

impl<T: Real> Instance for DropoutInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => {
                let (y, _) = dropout_forward(&self.x, self.keep_prob, self.mask_seed, self.workers)
                    .expect("validated keep_prob");
                y.checksum()
            }
            PassMode::Backward => dropout_backward(&self.mask, &self.dy, self.workers)
                .expect("lengths match")
                .checksum(),
            PassMode::Both => {
                let (y, mask) =
                    dropout_forward(&self.x, self.keep_prob, self.mask_seed, self.workers)
                        .expect("validated keep_prob");
                let dx = dropout_backward(&mask, &self.dy, self.workers).expect("lengths match");
                y.checksum() ^ dx.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        // mask determinism + concentration of the kept fraction
        let regenerated = DropoutMask::generate(self.x.len(), self.keep_prob, self.mask_seed);
        if regenerated.mask != self.mask.mask {
            return VerifyOutcome::fail("mask not regenerable from seed".to_string());
        }
        let fraction = self.mask.kept_fraction();
        let sigma = (self.keep_prob * (1.0 - self.keep_prob) / self.x.len() as f64).sqrt();
        if (fraction - self.keep_prob).abs() > 4.0 * sigma + 1e-12 {
            return VerifyOutcome::fail(format!(
                "kept fraction {fraction:.5} outside 4 sigma of {}",
                self.keep_prob
            ));
        }
        gradcheck_outcome(
            LayerKind::Dropout,
            self.mask_seed,
            format!(
                "kept fraction {fraction:.5}; output fnv64 {:016x}",
                self.checksum
            ),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.x.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── Softmax ──────────────────────────────────────────────────────────────

pub struct SoftmaxBenchmark;

impl Benchmark for SoftmaxBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-softmax".to_string(),
            level: 2,
            dwarf: Some("unstructured grid".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 65536, "classes (channel axis)"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 64.into()),
                    ("h", 56.into()),
                    ("w", 56.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        ensure_memory((n * c * h * w) as u64 * 8 * 4)?;
        let mode = PassMode::parse(params)?;
        dispatch_precision!(params, SoftmaxInstance<f32>, SoftmaxInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-softmax");
            let z: Tensor4<_> = Tensor4::random(n, c, h, w, &mut rng, -4.0, 4.0);
            let y = softmax_forward(&z, workers);
            let dy = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            SoftmaxInstance {
                z,
                y,
                dy,
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

struct SoftmaxInstance<T> {
    z: Tensor4<T>,
    y: Tensor4<T>,
    dy: Tensor4<T>,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

impl<T: Real> Instance for SoftmaxInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => softmax_forward(&self.z, self.workers).checksum(),
            PassMode::Backward => softmax_backward(&self.y, &self.dy, self.workers)
                .expect("shapes match")
                .checksum(),
            PassMode::Both => {
                let y = softmax_forward(&self.z, self.workers);
                let dz = softmax_backward(&y, &self.dy, self.workers).expect("shapes match");
                y.checksum() ^ dz.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        // fiber sums computed in f64; the bound scales with element rounding
        let y = softmax_forward(&self.z, self.workers);
        let spatial = self.z.h * self.z.w;
        let bound = 1e-6f64.max(self.z.c as f64 * T::epsilon().as_f64());
        for n in 0..self.z.n {
            for hw in 0..spatial {
                let base = n * self.z.c * spatial + hw;
                let mut sum = 0.0f64;
                for c in 0..self.z.c {
                    let v = y.data[base + c * spatial].as_f64();
                    if !(0.0..=1.0).contains(&v) {
                        return VerifyOutcome::fail(format!("probability {v} outside [0, 1]"));
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > bound {
                    return VerifyOutcome::fail(format!(
                        "fiber sum {sum} deviates from 1 by more than {bound:.1e}"
                    ));
                }
            }
        }
        gradcheck_outcome(
            LayerKind::Softmax,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.z.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── LRN ──────────────────────────────────────────────────────────────────

pub struct LrnBenchmark;

impl Benchmark for LrnBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-lrn".to_string(),
            level: 2,
            dwarf: Some("unstructured grid".to_string()),
            domain: Some("deep learning".to_string()),
            primary_metric: "melems_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 4096, "batch size"),
                ParamSpec::int("c", 1, 65536, "channels"),
                ParamSpec::int("h", 1, 8192, "height"),
                ParamSpec::int("w", 1, 8192, "width"),
                ParamSpec::int("nn", 1, 1024, "normalization neighborhood"),
                ParamSpec::float("k", 1e-9, 1e9, "additive constant"),
                ParamSpec::float("alpha", -1e9, 1e9, "sum scale"),
                ParamSpec::float("beta", -1e9, 1e9, "exponent"),
                mode_spec(),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("c", 64.into()),
                    ("h", 56.into()),
                    ("w", 56.into()),
                    ("nn", 5.into()),
                    ("k", 2.0.into()),
                    ("alpha", 1e-4.into()),
                    ("beta", 0.75.into()),
                    ("pass", "both".into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let (n, c, h, w) = tensor_dims(params)?;
        ensure_memory((n * c * h * w) as u64 * 8 * 4)?;
        let mode = PassMode::parse(params)?;
        let lrn = LrnParams {
            n_neighborhood: params.usize("nn")?,
            k: params.f64("k")?,
            alpha: params.f64("alpha")?,
            beta: params.f64("beta")?,
        };
        dispatch_precision!(params, LrnInstance<f32>, LrnInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-lrn");
            let a: Tensor4<_> = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            let dy = Tensor4::random(n, c, h, w, &mut rng, -1.0, 1.0);
            LrnInstance {
                a,
                dy,
                lrn: lrn.clone(),
                mode,
                workers,
                seed,
                checksum: 0,
            }
        })
    }
}

struct LrnInstance<T> {
    a: Tensor4<T>,
    dy: Tensor4<T>,
    lrn: LrnParams,
    mode: PassMode,
    workers: usize,
    seed: u64,
    checksum: u64,
}

impl<T: Real> Instance for LrnInstance<T> {
    fn kernel(&mut self) {
        self.checksum = match self.mode {
            PassMode::Forward => lrn_forward(&self.a, &self.lrn, self.workers)
                .expect("validated params")
                .checksum(),
            PassMode::Backward => lrn_backward(&self.a, &self.lrn, &self.dy, self.workers)
                .expect("validated params")
                .checksum(),
            PassMode::Both => {
                let b = lrn_forward(&self.a, &self.lrn, self.workers).expect("validated params");
                let dx = lrn_backward(&self.a, &self.lrn, &self.dy, self.workers)
                    .expect("validated params");
                b.checksum() ^ dx.checksum()
            }
        };
    }

    fn verify(&mut self) -> VerifyOutcome {
        gradcheck_outcome(
            LayerKind::Lrn,
            self.seed,
            format!("output fnv64 {:016x}", self.checksum),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "melems_per_sec".to_string(),
            self.a.len() as f64 / compute_seconds / 1e6,
        )]
    }
}

// ── Composite network ────────────────────────────────────────────────────

pub struct CompositeBenchmark;

impl Benchmark for CompositeBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "dnn-composite".to_string(),
            level: 2,
            dwarf: None,
            domain: Some("deep learning".to_string()),
            primary_metric: "samples_per_sec".to_string(),
            params: vec![
                ParamSpec::int("n", 1, 65536, "batch size"),
                ParamSpec::int("h", 2, 4096, "input height"),
                ParamSpec::int("w", 2, 4096, "input width"),
                ParamSpec::int("classes", 2, 65536, "output classes"),
                precision_spec(),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("n", batch_for_class(class)),
                    ("h", 32.into()),
                    ("w", 32.into()),
                    ("classes", 10.into()),
                    ("precision", "f32".into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let n = params.usize("n")?;
        let h = params.usize("h")?;
        let w = params.usize("w")?;
        let classes = params.usize("classes")?;
        ensure_memory((n * 16 * h * w) as u64 * 8 * 4)?;
        dispatch_precision!(params, CompositeInstance<f32>, CompositeInstance<f64>, {
            let mut rng = CounterRng::new(seed, "dnn-composite-input");
            let net = composite_net(n, 3, h, w, classes, seed)?;
            CompositeInstance {
                net,
                x: Tensor4::random(n, 3, h, w, &mut rng, -1.0, 1.0),
                workers,
                seed,
                output: None,
            }
        })
    }
}

struct CompositeInstance<T> {
    net: CompositeNet<T>,
    x: Tensor4<T>,
    workers: usize,
    seed: u64,
    output: Option<CompositeOutput<T>>,
}

impl<T: Real> Instance for CompositeInstance<T> {
    fn kernel(&mut self) {
        self.output = Some(
            composite_forward_backward(&mut self.net, &self.x, self.workers)
                .expect("validated dims"),
        );
    }

    fn verify(&mut self) -> VerifyOutcome {
        let out = self.output.as_ref().expect("kernel ran");
        if !out.loss.is_finite() || out.loss < 0.0 {
            return VerifyOutcome::fail(format!("loss {} out of range", out.loss));
        }
        if !out.input_grad.all_finite() {
            return VerifyOutcome::fail("non-finite input gradient".to_string());
        }
        gradcheck_outcome(
            LayerKind::Composite,
            self.seed,
            format!(
                "loss {:.6}; input grad fnv64 {:016x}",
                out.loss,
                out.input_grad.checksum()
            ),
        )
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let out = self.output.as_ref().expect("kernel ran");
        let mut metrics = vec![
            (
                "samples_per_sec".to_string(),
                self.x.n as f64 / compute_seconds,
            ),
            ("loss".to_string(), out.loss),
        ];
        for (name, seconds) in &out.layer_seconds {
            metrics.push((format!("t_{name}"), *seconds));
        }
        metrics
    }
}
