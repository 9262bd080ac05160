//! Seeded matrix samplers and the low-discrepancy sequence used for
//! reproducible direction searches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::Mat;
use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. entries uniform in `[-1, 1)`.
pub fn uniform_matrix<T: Real>(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat<T> {
    let data = (0..rows * cols).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
    Mat::new(rows, cols, data).expect("finite uniform samples")
}

/// Uniform draws until `accept` holds; returns the matrix and the number of rejections.
pub fn uniform_matrix_where<T: Real>(
    rng: &mut impl Rng,
    rows: usize,
    cols: usize,
    accept: impl Fn(&Mat<T>) -> bool,
) -> (Mat<T>, usize) {
    let mut rejected = 0;
    loop {
        let f = uniform_matrix(rng, rows, cols);
        if accept(&f) {
            return (f, rejected);
        }
        rejected += 1;
    }
}

pub fn unit_vector<T: Real>(rng: &mut impl Rng, len: usize) -> Vec<T> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.iter().map(|x| T::lit(x / n)).collect();
        }
    }
}

/// Unit rank-one matrix `a (x) b` with `|a| = |b| = 1`.
pub fn rank_one_direction<T: Real>(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat<T> {
    let a = unit_vector::<T>(rng, rows);
    let b = unit_vector::<T>(rng, cols);
    Mat::outer(&a, &b)
}

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Point `index` of the Halton sequence in `dim` dimensions (`dim <= 24`).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension {dim} unsupported");
    PRIMES[..dim].iter().map(|&p| radical_inverse(index, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let a: Mat<f64> = uniform_matrix(&mut rng(7), 2, 3);
        let b: Mat<f64> = uniform_matrix(&mut rng(7), 2, 3);
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|x| (-1.0..1.0).contains(x)));
        let d: Mat<f64> = rank_one_direction(&mut rng(1), 3, 3);
        assert!((d.frobenius() - 1.0).abs() < 1e-14);
    }
}
