//! Scalar abstraction over the two benchmark precisions.

use std::fmt::{Debug, Display};

/// Floating-point scalar the kernels are generic over (f32 for benchmarking
/// passes, f64 for gradient-check mode).
pub trait Real:
    num_traits::Float + num_traits::NumAssignOps + Send + Sync + Debug + Display + 'static
{
    const LABEL: &'static str;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_bits(self, hasher: &mut crate::util::Fnv1a);
}

impl Real for f32 {
    const LABEL: &'static str = "f32";

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn write_bits(self, hasher: &mut crate::util::Fnv1a) {
        hasher.update(&self.to_bits().to_le_bytes());
    }
}

impl Real for f64 {
    const LABEL: &'static str = "f64";

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    fn write_bits(self, hasher: &mut crate::util::Fnv1a) {
        hasher.update(&self.to_bits().to_le_bytes());
    }
}
