//! Fully connected layer on top of the level-1 GEMM.

use crate::error::{Error, Result};
use crate::level1::gemm::{gemm, Matrix};
use crate::real::Real;

/// `y = x W + bias` (bias broadcast over the batch).
pub fn connected_forward<T: Real>(
    x: &Matrix<T>,
    w: &Matrix<T>,
    bias: &[T],
    workers: usize,
) -> Result<Matrix<T>> {
    if bias.len() != w.cols {
        return Err(Error::InvalidInput(format!(
            "bias has {} entries for {} outputs",
            bias.len(),
            w.cols
        )));
    }
    let broadcast = Matrix::from_fn(x.rows, w.cols, |_, j| bias[j]);
    gemm(x, w, &broadcast, T::one(), T::one(), false, false, workers)
}

/// `dx = dy W^T`, `dW = x^T dy`, `dbias = column sums of dy`.
pub fn connected_backward<T: Real>(
    x: &Matrix<T>,
    w: &Matrix<T>,
    dy: &Matrix<T>,
    workers: usize,
) -> Result<(Matrix<T>, Matrix<T>, Vec<T>)> {
    if dy.rows != x.rows || dy.cols != w.cols || x.cols != w.rows {
        return Err(Error::InvalidInput(format!(
            "connected_backward: x {}x{}, w {}x{}, dy {}x{}",
            x.rows, x.cols, w.rows, w.cols, dy.rows, dy.cols
        )));
    }
    let zero_dx = Matrix::zeros(x.rows, x.cols);
    let dx = gemm(dy, w, &zero_dx, T::one(), T::zero(), false, true, workers)?;
    let zero_dw = Matrix::zeros(w.rows, w.cols);
    let dw = gemm(x, dy, &zero_dw, T::one(), T::zero(), true, false, workers)?;
    let mut dbias = vec![T::zero(); w.cols];
    for row in dy.data.chunks(dy.cols) {
        for (acc, &v) in dbias.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok((dx, dw, dbias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn identity_weights_and_zero_bias_pass_through() {
        let mut rng = CounterRng::new(1, "fc-test");
        let x: Matrix<f64> = Matrix::random(&mut rng, 4, 5, -1.0, 1.0);
        let w = Matrix::identity(5);
        let y = connected_forward(&x, &w, &[0.0; 5], 2).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn zero_input_yields_bias_rows() {
        let x: Matrix<f64> = Matrix::zeros(3, 4);
        let mut rng = CounterRng::new(2, "fc-test");
        let w: Matrix<f64> = Matrix::random(&mut rng, 4, 2, -1.0, 1.0);
        let bias = vec![0.5, -1.5];
        let y = connected_forward(&x, &w, &bias, 1).unwrap();
        for row in y.data.chunks(2) {
            assert_eq!(row, &bias[..]);
        }
    }

    #[test]
    fn backward_shapes_line_up() {
        let mut rng = CounterRng::new(3, "fc-test");
        let x: Matrix<f64> = Matrix::random(&mut rng, 4, 6, -1.0, 1.0);
        let w: Matrix<f64> = Matrix::random(&mut rng, 6, 3, -1.0, 1.0);
        let dy: Matrix<f64> = Matrix::random(&mut rng, 4, 3, -1.0, 1.0);
        let (dx, dw, dbias) = connected_backward(&x, &w, &dy, 2).unwrap();
        assert_eq!((dx.rows, dx.cols), (4, 6));
        assert_eq!((dw.rows, dw.cols), (6, 3));
        assert_eq!(dbias.len(), 3);
        // dbias is the column sums of dy
        for j in 0..3 {
            let want: f64 = (0..4).map(|i| dy.at(i, j)).sum();
            assert!((dbias[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_shapes_error() {
        let x: Matrix<f64> = Matrix::zeros(2, 3);
        let w: Matrix<f64> = Matrix::zeros(4, 5);
        assert!(connected_forward(&x, &w, &[0.0; 5], 1).is_err());
    }
}
