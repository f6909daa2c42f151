//! Stacked per-node vectors: an element of `H^n`, stored as an
//! `n_blocks × block_dim` matrix whose row `i` is node `i`'s copy.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct StackedVector<T: Scalar> {
    data: DMatrix<T>,
}

impl<T: Scalar> StackedVector<T> {
    pub fn zeros(n_blocks: usize, block_dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(n_blocks, block_dim),
        }
    }

    pub fn from_matrix(data: DMatrix<T>) -> Self {
        Self { data }
    }

    /// Builds from per-node blocks; every block must have the same length.
    pub fn from_blocks<B: AsRef<[T]>>(blocks: &[B]) -> Result<Self> {
        let n = blocks.len();
        let d = blocks.first().map_or(0, |b| b.as_ref().len());
        let mut data = DMatrix::zeros(n, d);
        for (i, b) in blocks.iter().enumerate() {
            let b = b.as_ref();
            if b.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.len(),
                });
            }
            for (j, &v) in b.iter().enumerate() {
                data[(i, j)] = v;
            }
        }
        Ok(Self { data })
    }

    /// `n` identical copies of `point`.
    pub fn consensus(n_blocks: usize, point: &[T]) -> Self {
        Self {
            data: DMatrix::from_fn(n_blocks, point.len(), |_, j| point[j]),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.data.nrows()
    }

    pub fn block_dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<T> {
        &mut self.data
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.data
    }

    pub fn block(&self, i: usize) -> Vec<T> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn set_block(&mut self, i: usize, values: &[T]) {
        for (j, &v) in values.iter().enumerate() {
            self.data[(i, j)] = v;
        }
    }

    pub fn norm_squared(&self) -> T {
        self.data.norm_squared()
    }

    pub fn norm(&self) -> T {
        self.data.norm()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.data.dot(&other.data)
    }

    /// Sum of all blocks, a vector of length `block_dim`.
    pub fn block_sum(&self) -> DVector<T> {
        self.data.row_sum().transpose()
    }

    pub fn block_mean(&self) -> Vec<T> {
        let n = T::of(self.n_blocks() as f64);
        self.block_sum().iter().map(|&s| s / n).collect()
    }

    /// Largest absolute coordinate of the block sum.
    pub fn block_sum_max_abs(&self) -> T {
        self.block_sum().amax()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        self.data.zip_apply(&x.data, |s, v| *s += a * v);
    }

    /// `a * x + b * y`.
    pub fn lin_comb(a: T, x: &Self, b: T, y: &Self) -> Self {
        Self {
            data: x.data.zip_map(&y.data, |u, v| a * u + b * v),
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            data: &self.data * a,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (&self.data - &other.data).amax()
    }
}

impl<T: Scalar> Add for &StackedVector<T> {
    type Output = StackedVector<T>;
    fn add(self, rhs: Self) -> StackedVector<T> {
        StackedVector {
            data: &self.data + &rhs.data,
        }
    }
}

impl<T: Scalar> Sub for &StackedVector<T> {
    type Output = StackedVector<T>;
    fn sub(self, rhs: Self) -> StackedVector<T> {
        StackedVector {
            data: &self.data - &rhs.data,
        }
    }
}

impl<T: Scalar> Mul<T> for &StackedVector<T> {
    type Output = StackedVector<T>;
    fn mul(self, rhs: T) -> StackedVector<T> {
        self.scaled(rhs)
    }
}

impl<T: Scalar> Neg for &StackedVector<T> {
    type Output = StackedVector<T>;
    fn neg(self) -> StackedVector<T> {
        StackedVector { data: -&self.data }
    }
}

impl<T: Scalar> AddAssign<&StackedVector<T>> for StackedVector<T> {
    fn add_assign(&mut self, rhs: &StackedVector<T>) {
        self.data += &rhs.data;
    }
}

impl<T: Scalar> SubAssign<&StackedVector<T>> for StackedVector<T> {
    fn sub_assign(&mut self, rhs: &StackedVector<T>) {
        self.data -= &rhs.data;
    }
}
