use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

use crate::error::{Error, Result};

/// Scalar type a [`Matrix`] can hold. Training runs on `f32`; gradient checks
/// re-run the same code in `f64`.
pub trait Real:
    Float + AddAssign + SubAssign + MulAssign + Sum + Debug + Default + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T = f32> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Debug> Debug for Matrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Matrix {}x{} ", self.rows, self.cols)?;
        if self.data.len() <= 16 {
            write!(f, "{:?}", self.data)
        } else {
            write!(f, "[{:?}, ...]", &self.data[..8])
        }
    }
}

impl<T: Real> Matrix<T> {
    /// Builds a matrix, rejecting zero dimensions, a wrong data length or
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix construction"));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self::from_raw(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::from_raw(rows, cols, data)
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

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// Sets one entry. Panics on a non-finite value.
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        assert!(v.is_finite(), "non-finite matrix entry");
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Plain (untracked) product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(kernels::matmul(self, other))
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.as_f64() * v.as_f64())
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) mod kernels {
    //! Raw products used by both the tape and plain matrix code. Inner
    //! loops run in `T` over contiguous rows so the compiler can vectorise.
    use super::{Matrix, Real};

    /// Below this output width the row-saxpy loops are too short to
    /// vectorise, and dot products over the shared dimension win.
    const NARROW: usize = 32;

    fn transposed<T: Real>(a: &Matrix<T>) -> Matrix<T> {
        let mut out = Vec::with_capacity(a.data.len());
        for c in 0..a.cols {
            out.extend((0..a.rows).map(|r| a.data[r * a.cols + c]));
        }
        Matrix::from_raw(a.cols, a.rows, out)
    }

    /// C = A·B
    pub fn matmul<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
        let (n, k, m) = (a.rows, a.cols, b.cols);
        if m < NARROW && k >= 8 {
            return matmul_bt(a, &transposed(b));
        }
        let mut out = vec![T::zero(); n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let av = a.data[i * k + p];
                if av == T::zero() {
                    continue;
                }
                let brow = &b.data[p * m..(p + 1) * m];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        Matrix::from_raw(n, m, out)
    }

    /// Dot product with eight independent accumulators, so the reduction
    /// vectorises.
    pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
        let mut acc = [T::zero(); 8];
        let ca = a.chunks_exact(8);
        let cb = b.chunks_exact(8);
        let tail: T = ca
            .remainder()
            .iter()
            .zip(cb.remainder())
            .fold(T::zero(), |s, (&x, &y)| s + x * y);
        for (x, y) in ca.zip(cb) {
            for l in 0..8 {
                acc[l] += x[l] * y[l];
            }
        }
        acc.iter().fold(tail, |s, &v| s + v)
    }

    /// C = A·Bᵀ
    pub fn matmul_bt<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
        let (n, k, m) = (a.rows, a.cols, b.rows);
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            let arow = &a.data[i * k..(i + 1) * k];
            for j in 0..m {
                let brow = &b.data[j * k..(j + 1) * k];
                out.push(dot(arow, brow));
            }
        }
        Matrix::from_raw(n, m, out)
    }

    /// C = Aᵀ·B
    pub fn matmul_at<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
        let (k, n, m) = (a.rows, a.cols, b.cols);
        if m < NARROW && k >= 8 {
            return matmul_bt(&transposed(a), &transposed(b));
        }
        let mut out = vec![T::zero(); n * m];
        for p in 0..k {
            let arow = &a.data[p * n..(p + 1) * n];
            let brow = &b.data[p * m..(p + 1) * m];
            for (i, &av) in arow.iter().enumerate() {
                if av == T::zero() {
                    continue;
                }
                let orow = &mut out[i * m..(i + 1) * m];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        Matrix::from_raw(n, m, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(Matrix::<f32>::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::<f32>::new(0, 2, vec![]).is_err());
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0f32, f32::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(Matrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn kernels_agree_with_transpose() {
        let a = Matrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64 * 0.5 - 2.0);
        let b = Matrix::from_fn(5, 4, |r, c| (r as f64 - c as f64) * 0.25);
        let bt = b.transpose();
        assert_eq!(kernels::matmul_bt(&a, &b), a.matmul(&bt).unwrap());
        let c = Matrix::from_fn(3, 2, |r, c| (r + c) as f64);
        assert_eq!(kernels::matmul_at(&a, &c), a.transpose().matmul(&c).unwrap());
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::<f32>::zeros(2, 3);
        let err = a.matmul(&Matrix::zeros(2, 3)).unwrap_err().to_string();
        assert!(err.contains("(2, 3)"), "{err}");
    }
}
