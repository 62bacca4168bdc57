//! Neural-network layer kernels, forward and backward.
//!
//! Layers are generic over [`crate::real::Real`] (f32 for benchmarking, f64
//! for gradient checks). Every backward pass is verified against central
//! finite differences through [`gradcheck`].

pub mod batchnorm;
pub mod bench;
pub mod composite;
pub mod connected;
pub mod conv;
pub mod gradcheck;
pub mod layers;
pub mod tensor;

pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormState};
pub use composite::{composite_forward_backward, composite_net, CompositeNet};
pub use connected::{connected_backward, connected_forward};
pub use conv::{conv_backward, conv_forward, ConvParams};
pub use layers::{
    avgpool_backward, avgpool_forward, dropout_backward, dropout_forward, lrn_backward,
    lrn_forward, relu_backward, relu_forward, softmax_backward, softmax_forward, DropoutMask,
    LrnParams,
};
pub use tensor::Tensor4;
