//! Dense 4-D tensor in batch/channel/height/width order.

use crate::real::Real;
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Tensor4<T> {
        Tensor4 {
            n,
            c,
            h,
            w,
            data: vec![T::zero(); n * c * h * w],
        }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<T>) -> Tensor4<T> {
        assert_eq!(data.len(), n * c * h * w);
        Tensor4 { n, c, h, w, data }
    }

    pub fn random(
        n: usize,
        c: usize,
        h: usize,
        w: usize,
        rng: &mut CounterRng,
        lo: f64,
        hi: f64,
    ) -> Tensor4<T> {
        let mut t = Tensor4::zeros(n, c, h, w);
        for v in t.data.iter_mut() {
            *v = T::from_f64(lo + (hi - lo) * rng.next_f64());
        }
        t
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.c + c) * self.h + h) * self.w + w
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, h: usize, w: usize) -> T {
        self.data[self.idx(n, c, h, w)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, h: usize, w: usize, v: T) {
        let i = self.idx(n, c, h, w);
        self.data[i] = v;
    }

    pub fn same_shape<U>(&self, other: &Tensor4<U>) -> bool {
        self.n == other.n && self.c == other.c && self.h == other.h && self.w == other.w
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn checksum(&self) -> u64 {
        let mut hasher = crate::util::Fnv1a::new();
        for v in &self.data {
            v.write_bits(&mut hasher);
        }
        hasher.finish()
    }

    /// Same data viewed in another precision.
    pub fn cast<U: Real>(&self) -> Tensor4<U> {
        Tensor4 {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major_in_nchw() {
        let t: Tensor4<f32> = Tensor4::zeros(2, 3, 4, 5);
        assert_eq!(t.idx(0, 0, 0, 0), 0);
        assert_eq!(t.idx(0, 0, 0, 1), 1);
        assert_eq!(t.idx(0, 0, 1, 0), 5);
        assert_eq!(t.idx(0, 1, 0, 0), 20);
        assert_eq!(t.idx(1, 0, 0, 0), 60);
        assert_eq!(t.len(), 120);
    }

    #[test]
    fn random_tensor_is_reproducible() {
        let mut rng1 = CounterRng::new(5, "tensor");
        let mut rng2 = CounterRng::new(5, "tensor");
        let a: Tensor4<f64> = Tensor4::random(1, 2, 3, 4, &mut rng1, -1.0, 1.0);
        let b: Tensor4<f64> = Tensor4::random(1, 2, 3, 4, &mut rng2, -1.0, 1.0);
        assert_eq!(a, b);
        assert!(a.all_finite());
    }
}
