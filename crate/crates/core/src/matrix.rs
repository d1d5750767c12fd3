//! Dense square matrices, stored row-major.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    n: usize,
    data: Vec<E>,
}

pub type CMatrix<T> = Matrix<Complex<T>>;

impl<E> Matrix<E> {
    pub fn new(n: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::arg(format!(
                "matrix of dimension {n} needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("matrix rows must all have length equal to the row count"));
        }
        Ok(Matrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn map<F, G: FnMut(&E) -> F>(&self, g: G) -> Matrix<F> {
        Matrix { n: self.n, data: self.data.iter().map(g).collect() }
    }
}

impl<E: Clone> Matrix<E> {
    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.n, |i, j| self[(j, i)].clone())
    }

    /// Submatrix picking `rows` and `cols` (repetitions allowed, same length).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), cols.len(), "select needs a square index set");
        Matrix::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])].clone())
    }
}

impl<E: Zero + One + Clone> Matrix<E> {
    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, |i, j| if i == j { E::one() } else { E::zero() })
    }
}

impl<E: Zero + Clone> Matrix<E> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![E::zero(); n * n] }
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.n + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> CMatrix<T> {
    pub fn adjoint(&self) -> Self {
        Matrix::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).fold(Complex::zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    pub fn hadamard(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-entry deviation of `A†A` from the identity.
    pub fn unitarity_deviation(&self) -> T {
        self.adjoint().matmul(self).max_abs_diff(&Matrix::identity(self.n))
    }

    /// Max-entry deviation from `A = A†`.
    pub fn hermiticity_deviation(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn column_max_norms(&self) -> Vec<T> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).fold(T::zero(), T::max))
            .collect()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }
}
