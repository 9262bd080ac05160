//! Small dense matrices and the exact primitives built on them: 2x2 minors,
//! adjugate rows/columns, determinants, planar and blockwise rotations, the
//! vector product, and a scaled rank-one test.
//!
//! All indices are zero-based.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::scalar::{Real, Scalar};

/// Selects rows or columns for the adjugate / Laplace expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

/// Dense `rows x cols` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return arg(format!("matrix shape {rows}x{cols} must be at least 1x1"));
        }
        if data.len() != rows * cols {
            return arg(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite_value()) {
            return arg(format!("non-finite entry {bad}"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != n) {
            return arg("ragged rows");
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(m, n, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Outer product `a (x) b`, a rank-one matrix of shape `len(a) x len(b)`.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        let data = a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect();
        Self { rows: a.len(), cols: b.len(), data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Row or column `k`, depending on `axis`.
    pub fn line(&self, k: usize, axis: Axis) -> Vec<T> {
        match axis {
            Axis::Row => self.row(k).to_vec(),
            Axis::Column => self.col(k),
        }
    }

    pub fn set_row(&mut self, i: usize, values: &[T]) {
        assert_eq!(values.len(), self.cols);
        self.data[i * self.cols..(i + 1) * self.cols].copy_from_slice(values);
    }

    pub fn set_line(&mut self, k: usize, axis: Axis, values: &[T]) {
        match axis {
            Axis::Row => self.set_row(k, values),
            Axis::Column => {
                assert_eq!(values.len(), self.rows);
                for (i, v) in values.iter().enumerate() {
                    self.set(i, k, *v);
                }
            }
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| x * c)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// `self + c * other`
    pub fn axpy(&self, c: T, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + c * b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| {
            let a = x.magnitude();
            if a > m {
                a
            } else {
                m
            }
        })
    }

    pub fn frobenius_sq(&self) -> T {
        dot(&self.data, &self.data)
    }

    /// The `i`-th 2x2 block of a `2 x 2N` matrix (columns `2i`, `2i+1`).
    pub fn block2(&self, i: usize) -> Result<Self> {
        if self.rows != 2 || self.cols % 2 != 0 || 2 * i + 1 >= self.cols {
            return arg(format!("block {i} unavailable for a {}x{} matrix", self.rows, self.cols));
        }
        Ok(Self {
            rows: 2,
            cols: 2,
            data: vec![
                self.get(0, 2 * i),
                self.get(0, 2 * i + 1),
                self.get(1, 2 * i),
                self.get(1, 2 * i + 1),
            ],
        })
    }

    /// Copy of `self` with 2x2 block `i` replaced.
    pub fn with_block2(&self, i: usize, block: &Self) -> Self {
        let mut out = self.clone();
        for r in 0..2 {
            for c in 0..2 {
                out.set(r, 2 * i + c, block.get(r, c));
            }
        }
        out
    }

    /// Matrix with row `skip_r` and column `skip_c` removed.
    pub fn submatrix(&self, skip_r: usize, skip_c: usize) -> Self {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in (0..self.rows).filter(|&i| i != skip_r) {
            for j in (0..self.cols).filter(|&j| j != skip_c) {
                data.push(self.get(i, j));
            }
        }
        Self { rows: self.rows - 1, cols: self.cols - 1, data }
    }
}

impl<T: Real> Mat<T> {
    pub fn frobenius(&self) -> T {
        self.frobenius_sq().sqrt()
    }
}

impl<T: Scalar> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: Self) -> Mat<T> {
        self.axpy(T::one(), rhs)
    }
}

impl<T: Scalar> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: Self) -> Mat<T> {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }
}

impl<T: Scalar> Mul<T> for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, c: T) -> Mat<T> {
        self.scale(c)
    }
}

impl<T: Scalar + Serialize> Serialize for Mat<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Mat<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<T>> = Vec::deserialize(d)?;
        Mat::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

/// `F[i1,j1] F[i2,j2] - F[i1,j2] F[i2,j1]`.
pub fn minor2<T: Scalar>(f: &Mat<T>, i1: usize, i2: usize, j1: usize, j2: usize) -> Result<T> {
    if i1 >= f.rows || i2 >= f.rows || j1 >= f.cols || j2 >= f.cols {
        return arg(format!(
            "minor indices ({i1},{i2})x({j1},{j2}) out of range for {}x{}",
            f.rows, f.cols
        ));
    }
    if i1 == i2 || j1 == j2 {
        return arg("minor indices must be distinct");
    }
    Ok(f.get(i1, j1) * f.get(i2, j2) - f.get(i1, j2) * f.get(i2, j1))
}

fn cofactor<T: Scalar>(f: &Mat<T>, i: usize, j: usize) -> T {
    let m = if f.rows == 1 { T::one() } else { det_unchecked(&f.submatrix(i, j)) };
    if (i + j) % 2 == 0 {
        m
    } else {
        -m
    }
}

/// Signed cofactors along row or column `j`, so that `det F = adj . F_line(j)`.
pub fn adjugate_vector<T: Scalar>(f: &Mat<T>, j: usize, axis: Axis) -> Result<Vec<T>> {
    if !f.is_square() {
        return arg(format!("adjugate needs a square matrix, got {}x{}", f.rows, f.cols));
    }
    if j >= f.rows {
        return arg(format!("index {j} out of range for {}x{}", f.rows, f.cols));
    }
    let n = f.rows;
    Ok(match axis {
        Axis::Row => (0..n).map(|k| cofactor(f, j, k)).collect(),
        Axis::Column => (0..n).map(|k| cofactor(f, k, j)).collect(),
    })
}

/// Determinant: Laplace expansion up to 4x4, partially pivoted elimination beyond.
pub fn det<T: Scalar>(f: &Mat<T>) -> Result<T> {
    if !f.is_square() {
        return arg(format!("determinant needs a square matrix, got {}x{}", f.rows, f.cols));
    }
    Ok(det_unchecked(f))
}

fn det_unchecked<T: Scalar>(f: &Mat<T>) -> T {
    match f.rows {
        1 => f.data[0],
        // written so that it agrees bit-for-bit with -F1 . rot2(F2)
        2 => -(f.data[0] * -f.data[3] + f.data[1] * f.data[2]),
        3 | 4 => {
            let mut acc = T::zero();
            for k in 0..f.cols {
                let a = f.get(0, k);
                if a != T::zero() {
                    acc = acc + a * cofactor(f, 0, k);
                }
            }
            acc
        }
        _ => det_elimination(f),
    }
}

fn det_elimination<T: Scalar>(f: &Mat<T>) -> T {
    let n = f.rows;
    let mut a = f.data.clone();
    let mut sign = T::one();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&p, &q| {
                a[p * n + k]
                    .magnitude()
                    .partial_cmp(&a[q * n + k].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot * n + k] == T::zero() {
            return T::zero();
        }
        if pivot != k {
            for c in 0..n {
                a.swap(k * n + c, pivot * n + c);
            }
            sign = -sign;
        }
        let p = a[k * n + k];
        for r in k + 1..n {
            let factor = a[r * n + k] / p;
            if factor != T::zero() {
                for c in k..n {
                    a[r * n + c] = a[r * n + c] - factor * a[k * n + c];
                }
            }
        }
    }
    (0..n).fold(sign, |acc, i| acc * a[i * n + i])
}

/// Counterclockwise quarter turn in the plane.
pub fn rot2<T: Scalar>(x: [T; 2]) -> [T; 2] {
    [-x[1], x[0]]
}

/// Applies [`rot2`] to each consecutive pair of an even-length vector.
pub fn rot_block<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    if x.len() % 2 != 0 {
        return arg(format!("blockwise rotation needs even length, got {}", x.len()));
    }
    Ok(x.chunks_exact(2).flat_map(|c| rot2([c[0], c[1]])).collect())
}

pub fn cross3<T: Scalar>(u: &[T], v: &[T]) -> Result<[T; 3]> {
    if u.len() != 3 || v.len() != 3 {
        return arg("vector product needs 3-vectors");
    }
    Ok([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]])
}

/// `sum_i det F_i` over the 2x2 column blocks of a `2 x 2N` matrix.
pub fn block_det_sum<T: Scalar>(f: &Mat<T>) -> Result<T> {
    if f.rows != 2 || f.cols % 2 != 0 {
        return arg(format!("block determinant sum needs a 2x2N matrix, got {}x{}", f.rows, f.cols));
    }
    let mut acc = T::zero();
    for i in 0..f.cols / 2 {
        acc = acc + minor2(f, 0, 1, 2 * i, 2 * i + 1)?;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankOneReport<T> {
    /// Largest |2x2 minor| divided by `1 + max|entry|^2`.
    pub defect: T,
    pub is_rank_le_one: bool,
}

pub fn rank_one_defect<T: Scalar>(a: &Mat<T>, tol: T) -> RankOneReport<T> {
    let mut worst = T::zero();
    for i1 in 0..a.rows {
        for i2 in i1 + 1..a.rows {
            for j1 in 0..a.cols {
                for j2 in j1 + 1..a.cols {
                    let m = (a.get(i1, j1) * a.get(i2, j2) - a.get(i1, j2) * a.get(i2, j1)).magnitude();
                    if m > worst {
                        worst = m;
                    }
                }
            }
        }
    }
    let e = a.max_abs();
    let defect = worst / (T::one() + e * e);
    RankOneReport { defect, is_rank_le_one: defect <= tol }
}

/// Unit normal to `u` in R^3, built from the coordinate axis least aligned with it.
pub(crate) fn unit_normal3<T: Real>(u: &[T]) -> Result<[T; 3]> {
    let k = (0..3)
        .min_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    let mut axis = [T::zero(); 3];
    axis[k] = T::one();
    let c = cross3(u, &axis)?;
    let n = norm(&c);
    if n == T::zero() {
        return Err(Error::Degenerate("zero vector has no normal".into()));
    }
    Ok([c[0] / n, c[1] / n, c[2] / n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(rows).unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
        Mat::new(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    // Independent determinant: Doolittle LU without pivoting reorder tricks,
    // falling back to row swaps only when a pivot is exactly zero.
    fn lu_det(f: &Mat<f64>) -> f64 {
        let n = f.rows();
        let mut a: Vec<Vec<f64>> = f.to_rows();
        let mut d = 1.0;
        for k in 0..n {
            if a[k][k] == 0.0 {
                match (k + 1..n).find(|&r| a[r][k] != 0.0) {
                    Some(r) => {
                        a.swap(k, r);
                        d = -d;
                    }
                    None => return 0.0,
                }
            }
            d *= a[k][k];
            for r in k + 1..n {
                let l = a[r][k] / a[k][k];
                for c in k..n {
                    a[r][c] -= l * a[k][c];
                }
            }
        }
        d
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(Mat::<f64>::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Mat::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Mat::<f64>::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn minor2_examples() {
        assert_eq!(minor2(&Mat::<f64>::identity(2), 0, 1, 0, 1).unwrap(), 1.0);
        assert_eq!(minor2(&m(&[&[1.0, 1.0], &[0.0, 1.0]]), 0, 1, 0, 1).unwrap(), 1.0);
        assert_eq!(minor2(&m(&[&[2.0, 3.0], &[4.0, 6.0]]), 0, 1, 0, 1).unwrap(), 0.0);
        assert!(matches!(minor2(&Mat::<f64>::identity(2), 0, 2, 0, 1), Err(Error::Argument(_))));
        assert!(minor2(&Mat::<f64>::identity(2), 0, 0, 0, 1).is_err());
    }

    #[test]
    fn adjugate_examples() {
        let adj = adjugate_vector(&Mat::<f64>::identity(3), 2, Axis::Row).unwrap();
        assert_eq!(adj, vec![0.0, 0.0, 1.0]);
        let adj = adjugate_vector(&Mat::diag(&[2.0, 3.0, 5.0]), 0, Axis::Row).unwrap();
        assert_eq!(adj, vec![15.0, 0.0, 0.0]);
        assert!(adjugate_vector(&Mat::<f64>::zeros(2, 3), 0, Axis::Row).is_err());
        assert!(adjugate_vector(&Mat::<f64>::identity(3), 3, Axis::Row).is_err());
    }

    #[test]
    fn adjugate_matches_lu_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=4 {
            for _ in 0..200 {
                let f = random(&mut rng, n, n);
                let d = lu_det(&f);
                for j in 0..n {
                    for axis in [Axis::Row, Axis::Column] {
                        let adj = adjugate_vector(&f, j, axis).unwrap();
                        let via = dot(&adj, &f.line(j, axis));
                        assert!((via - d).abs() <= 1e-12 * (1.0 + d.abs()), "n={n} j={j} {via} vs {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn det_examples() {
        for n in 1..=7 {
            assert_eq!(det(&Mat::<f64>::identity(n)).unwrap(), 1.0);
        }
        assert_eq!(det(&m(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap(), 1.0);
        assert!(det(&Mat::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn det_elimination_agrees_with_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [5, 6] {
            for _ in 0..50 {
                let f = random(&mut rng, n, n);
                let (a, b) = (det(&f).unwrap(), lu_det(&f));
                assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn det_2x2_equals_rotated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let f = random(&mut rng, 2, 2);
            let r = rot2([f.get(1, 0), f.get(1, 1)]);
            let alt = -dot(f.row(0), &r);
            assert!((det(&f).unwrap() - alt).abs() <= 1e-14);
        }
    }

    #[test]
    fn rotations() {
        assert_eq!(rot2([1.0, 0.0]), [0.0, 1.0]);
        assert_eq!(rot2([0.0, 1.0]), [-1.0, 0.0]);
        assert_eq!(rot_block(&[1.0, 0.0, 0.0, 1.0]).unwrap(), vec![0.0, 1.0, -1.0, 0.0]);
        assert!(rot_block(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn block_rotation_gives_block_determinant_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let f = random(&mut rng, 2, 4);
            let lhs = -dot(f.row(0), &rot_block(f.row(1)).unwrap());
            let blocks = det(&f.block2(0).unwrap()).unwrap() + det(&f.block2(1).unwrap()).unwrap();
            assert!((lhs - blocks).abs() <= 1e-14);
            assert!((block_det_sum(&f).unwrap() - blocks).abs() <= 1e-15);
        }
    }

    #[test]
    fn cross3_examples() {
        assert_eq!(cross3(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(cross3(&[0.3, -2.0, 1.5], &[0.3, -2.0, 1.5]).unwrap(), [0.0; 3]);
        assert!(cross3(&[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn cross_norm_is_root_sum_of_minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let f = random(&mut rng, 2, 3);
            let c = cross3(f.row(0), f.row(1)).unwrap();
            let minors: f64 = [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(a, b)| minor2(&f, 0, 1, a, b).unwrap().powi(2))
                .sum();
            assert!((norm_sq(&c) - minors).abs() <= 1e-14);
        }
    }

    #[test]
    fn rank_one_examples() {
        let r = rank_one_defect(&Mat::outer(&[1.0, -2.0], &[3.0, 0.5, 4.0]), 1e-12);
        assert_eq!(r.defect, 0.0);
        assert!(r.is_rank_le_one);
        let r = rank_one_defect(&Mat::<f64>::identity(2), 1e-9);
        assert_eq!(r.defect, 0.5);
        assert!(!r.is_rank_le_one);
        let r = rank_one_defect(&Mat::<f64>::zeros(3, 3), 0.0);
        assert_eq!(r.defect, 0.0);
        assert!(r.is_rank_le_one);
    }

    #[test]
    fn exact_identities_on_rationals() {
        let q = |n: i64, d: i64| Rational64::new(n, d);
        let f = Mat::from_rows(&[
            [q(1, 2), q(-3, 4), q(2, 1)],
            [q(5, 3), q(0, 1), q(-1, 7)],
            [q(2, 9), q(4, 5), q(1, 1)],
        ])
        .unwrap();
        let d = det(&f).unwrap();
        for j in 0..3 {
            for axis in [Axis::Row, Axis::Column] {
                let adj = adjugate_vector(&f, j, axis).unwrap();
                assert_eq!(dot(&adj, &f.line(j, axis)), d);
            }
        }
        let big = Mat::from_rows(&[
            [q(1, 1), q(2, 1), q(0, 1), q(1, 3), q(1, 1)],
            [q(0, 1), q(1, 2), q(3, 1), q(0, 1), q(2, 1)],
            [q(1, 1), q(0, 1), q(1, 1), q(1, 1), q(0, 1)],
            [q(2, 1), q(1, 1), q(0, 1), q(1, 5), q(1, 1)],
            [q(0, 1), q(1, 1), q(1, 1), q(0, 1), q(3, 2)],
        ])
        .unwrap();
        // Laplace along the first row of the 5x5, each 4x4 by cofactors
        let via_adj = dot(&adjugate_vector(&big, 0, Axis::Row).unwrap(), big.row(0));
        assert_eq!(det(&big).unwrap(), via_adj);
    }

    proptest! {
        #[test]
        fn outer_products_of_integers_are_exactly_rank_one(
            a in prop::collection::vec(-50i64..50, 1..4),
            b in prop::collection::vec(-50i64..50, 1..5),
        ) {
            let af: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            let bf: Vec<f64> = b.iter().map(|&x| x as f64).collect();
            prop_assert_eq!(rank_one_defect(&Mat::outer(&af, &bf), 0.0).defect, 0.0);
            let aq: Vec<Rational64> = a.iter().map(|&x| Rational64::from_integer(x)).collect();
            let bq: Vec<Rational64> = b.iter().map(|&x| Rational64::new(x, 7)).collect();
            prop_assert_eq!(rank_one_defect(&Mat::outer(&aq, &bq), Rational64::from_integer(0)).defect,
                Rational64::from_integer(0));
        }

        #[test]
        fn rotations_are_isometries(x in prop::collection::vec(-1e3f64..1e3, 1..5)) {
            let v: Vec<f64> = x.iter().flat_map(|&a| [a, 0.5 * a - 1.0]).collect();
            let r = rot_block(&v).unwrap();
            prop_assert!((norm(&r) - norm(&v)).abs() <= 1e-15 * (1.0 + norm(&v)));
            let rr = rot_block(&r).unwrap();
            for (a, b) in rr.iter().zip(&v) {
                prop_assert_eq!(*a, -*b);
            }
            let p = [v[0], v[1]];
            prop_assert_eq!(rot2(rot2(p)), [-p[0], -p[1]]);
        }
    }
}
