//! Dense matrix multiply: `C <- alpha * op(A) * op(B) + beta * C`.
//!
//! Parallel over row bands of the output. The k-accumulation for every output
//! element runs in ascending order regardless of worker count, so results are
//! bit-identical across `workers` settings.

use crate::error::{Error, Result};
use crate::parallel::par_row_bands_mut;
use crate::real::Real;
use crate::rng::CounterRng;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Matrix<T> {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Matrix<T> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Matrix<T> {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn random(rng: &mut CounterRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix<T> {
        Matrix::from_fn(rows, cols, |_, _| {
            T::from_f64(lo + (hi - lo) * rng.next_f64())
        })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transposed(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }
}

/// Returns `alpha * op(A) * op(B) + beta * C`.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    c: &Matrix<T>,
    alpha: T,
    beta: T,
    transpose_a: bool,
    transpose_b: bool,
    workers: usize,
) -> Result<Matrix<T>> {
    let (m, k) = if transpose_a {
        (a.cols, a.rows)
    } else {
        (a.rows, a.cols)
    };
    let (kb, n) = if transpose_b {
        (b.cols, b.rows)
    } else {
        (b.rows, b.cols)
    };
    if k != kb {
        return Err(Error::InvalidInput(format!(
            "op(A) is {m}x{k} but op(B) is {kb}x{n}"
        )));
    }
    if c.rows != m || c.cols != n {
        return Err(Error::InvalidInput(format!(
            "C is {}x{} but product is {m}x{n}",
            c.rows, c.cols
        )));
    }

    // Pack transposed operands so the inner kernel always streams rows.
    let a_t;
    let a_eff = if transpose_a {
        a_t = a.transposed();
        &a_t
    } else {
        a
    };
    let b_t;
    let b_eff = if transpose_b {
        b_t = b.transposed();
        &b_t
    } else {
        b
    };

    let mut out = Matrix::from_fn(m, n, |i, j| beta * c.at(i, j));
    par_row_bands_mut(workers, &mut out.data, n, |first_row, band| {
        for (local, row) in band.chunks_mut(n).enumerate() {
            let i = first_row + local;
            for kk in 0..k {
                let f = alpha * a_eff.at(i, kk);
                let b_row = &b_eff.data[kk * n..kk * n + n];
                for (dst, &bv) in row.iter_mut().zip(b_row) {
                    *dst += f * bv;
                }
            }
        }
    });
    Ok(out)
}

/// Independent triple-loop reference with direct transposed indexing; the
/// verification oracle for the blocked kernel above.
pub fn gemm_reference<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    c: &Matrix<T>,
    alpha: T,
    beta: T,
    transpose_a: bool,
    transpose_b: bool,
) -> Matrix<T> {
    let (m, k) = if transpose_a {
        (a.cols, a.rows)
    } else {
        (a.rows, a.cols)
    };
    let n = if transpose_b { b.rows } else { b.cols };
    let av = |i: usize, kk: usize| {
        if transpose_a {
            a.at(kk, i)
        } else {
            a.at(i, kk)
        }
    };
    let bv = |kk: usize, j: usize| {
        if transpose_b {
            b.at(j, kk)
        } else {
            b.at(kk, j)
        }
    };
    let mut out = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut acc = beta * c.at(i, j);
            for kk in 0..k {
                acc += alpha * av(i, kk) * bv(kk, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// `||X - Y||_F / ||Y||_F`.
pub fn relative_frobenius<T: Real>(x: &Matrix<T>, y: &Matrix<T>) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (a, b) in x.data.iter().zip(&y.data) {
        let d = a.as_f64() - b.as_f64();
        num += d * d;
        den += b.as_f64() * b.as_f64();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gemm_oracle<T: Real>(
        a: &Matrix<T>,
        b: &Matrix<T>,
        c: &Matrix<T>,
        alpha: T,
        beta: T,
        ta: bool,
        tb: bool,
    ) -> Matrix<T> {
        gemm_reference(a, b, c, alpha, beta, ta, tb)
    }

    #[test]
    fn identity_times_b_is_b() {
        let mut rng = CounterRng::new(1, "gemm-test");
        let b: Matrix<f32> = Matrix::random(&mut rng, 16, 16, -1.0, 1.0);
        let a = Matrix::identity(16);
        let c = Matrix::zeros(16, 16);
        let out = gemm(&a, &b, &c, 1.0, 0.0, false, false, 2).unwrap();
        assert_eq!(out.data, b.data);
    }

    #[test]
    fn alpha_zero_beta_one_leaves_c() {
        let mut rng = CounterRng::new(2, "gemm-test");
        let a: Matrix<f32> = Matrix::random(&mut rng, 8, 8, -1.0, 1.0);
        let b: Matrix<f32> = Matrix::random(&mut rng, 8, 8, -1.0, 1.0);
        let c: Matrix<f32> = Matrix::random(&mut rng, 8, 8, -1.0, 1.0);
        let out = gemm(&a, &b, &c, 0.0, 1.0, false, false, 1).unwrap();
        assert_eq!(out.data, c.data);
    }

    #[test]
    fn all_transpose_combinations_match_oracle_f32() {
        let mut rng = CounterRng::new(3, "gemm-test");
        let (m, k, n) = (64, 32, 48);
        for &(ta, tb) in &[(false, false), (true, false), (false, true), (true, true)] {
            let a: Matrix<f32> = if ta {
                Matrix::random(&mut rng, k, m, -1.0, 1.0)
            } else {
                Matrix::random(&mut rng, m, k, -1.0, 1.0)
            };
            let b: Matrix<f32> = if tb {
                Matrix::random(&mut rng, n, k, -1.0, 1.0)
            } else {
                Matrix::random(&mut rng, k, n, -1.0, 1.0)
            };
            let c: Matrix<f32> = Matrix::random(&mut rng, m, n, -1.0, 1.0);
            let got = gemm(&a, &b, &c, 1.5, 0.5, ta, tb, 3).unwrap();
            let want = gemm_oracle(&a, &b, &c, 1.5, 0.5, ta, tb);
            assert!(
                relative_frobenius(&got, &want) < 1e-4,
                "ta={ta} tb={tb} relative error {}",
                relative_frobenius(&got, &want)
            );
        }
    }

    #[test]
    fn all_transpose_combinations_match_oracle_f64() {
        let mut rng = CounterRng::new(4, "gemm-test");
        for &(ta, tb) in &[(false, false), (true, false), (false, true), (true, true)] {
            let a: Matrix<f64> = Matrix::random(&mut rng, 24, 24, -1.0, 1.0);
            let b: Matrix<f64> = Matrix::random(&mut rng, 24, 24, -1.0, 1.0);
            let c: Matrix<f64> = Matrix::random(&mut rng, 24, 24, -1.0, 1.0);
            let got = gemm(&a, &b, &c, 2.0, -1.0, ta, tb, 2).unwrap();
            let want = gemm_oracle(&a, &b, &c, 2.0, -1.0, ta, tb);
            assert!(relative_frobenius(&got, &want) < 1e-10);
        }
    }

    #[test]
    fn multiplying_by_identity_is_bitwise_idempotent() {
        let mut rng = CounterRng::new(5, "gemm-test");
        let a: Matrix<f32> = Matrix::random(&mut rng, 20, 20, -2.0, 2.0);
        let i = Matrix::identity(20);
        let zero = Matrix::zeros(20, 20);
        let once = gemm(&a, &i, &zero, 1.0, 0.0, false, false, 2).unwrap();
        let twice = gemm(&once, &i, &zero, 1.0, 0.0, false, false, 2).unwrap();
        assert_eq!(once.data, twice.data);
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let mut rng = CounterRng::new(6, "gemm-test");
        let a: Matrix<f32> = Matrix::random(&mut rng, 33, 17, -1.0, 1.0);
        let b: Matrix<f32> = Matrix::random(&mut rng, 17, 29, -1.0, 1.0);
        let c: Matrix<f32> = Matrix::zeros(33, 29);
        let w1 = gemm(&a, &b, &c, 1.0, 0.0, false, false, 1).unwrap();
        let w4 = gemm(&a, &b, &c, 1.0, 0.0, false, false, 4).unwrap();
        assert_eq!(w1.data, w4.data);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a: Matrix<f32> = Matrix::zeros(4, 5);
        let b: Matrix<f32> = Matrix::zeros(6, 3);
        let c: Matrix<f32> = Matrix::zeros(4, 3);
        assert!(gemm(&a, &b, &c, 1.0, 0.0, false, false, 1).is_err());
    }
}
