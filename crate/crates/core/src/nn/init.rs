//! Weight initializers.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

/// `gain` times a random matrix with orthonormal rows or columns, whichever are
/// fewer. Modified Gram-Schmidt on a Gaussian matrix keeps the diagonal of R
/// positive, which makes the result Haar distributed.
pub fn orthogonal<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    gain: f64,
    rng: &mut R,
) -> Array2<T> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let mut q: Array2<f64> = Array2::from_shape_fn((tall, short), |_| rng.sample(StandardNormal));
    for j in 0..short {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let qk = q.column(k).to_owned();
            q.column_mut(j).scaled_add(-proj, &qk);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm > 0.0 {
            q.column_mut(j).mapv_inplace(|v| v / norm);
        }
    }
    let q = if rows < cols { q.reversed_axes() } else { q };
    Array2::from_shape_fn((rows, cols), |(i, j)| T::lit(gain * q[[i, j]]))
}

/// Uniform in `[-1/sqrt(cols), 1/sqrt(cols)]`.
pub fn fan_in_uniform<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<T> {
    let bound = 1.0 / (cols.max(1) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| T::lit(rng.random_range(-bound..=bound)))
}
