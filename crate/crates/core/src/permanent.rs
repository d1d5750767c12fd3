//! Matrix permanents `per(A) = Σ_σ ∏_α A_{σ(α),α}`.
//!
//! The evaluators are generic over the entry ring, so the same code runs on
//! complex floats, plain integers or exact rationals.

use num_traits::Num;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Matrix};
use crate::Real;

pub use crate::matrix::CMatrix as ComplexMatrix;

pub const NAIVE_MAX: usize = 9;
pub const RYSER_MAX: usize = 24;
/// From this size on, the Gray-code loop is split into fixed blocks.
pub const RYSER_PARALLEL_FROM: usize = 20;
const RYSER_BLOCKS_LOG2: u32 = 8;

/// Relative threshold of the scale-aware zero test.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Direct sum over all `n!` permutations.
pub fn permanent_naive<E: Num + Clone>(a: &Matrix<E>) -> Result<E> {
    let n = a.dim();
    if n > NAIVE_MAX {
        return Err(Error::size("naive permanent dimension", n, NAIVE_MAX));
    }
    fn rec<E: Num + Clone>(a: &Matrix<E>, col: usize, used: &mut [bool], acc: E) -> E {
        let n = a.dim();
        if col == n {
            return acc;
        }
        let mut total = E::zero();
        for row in 0..n {
            if !used[row] {
                used[row] = true;
                total = total + rec(a, col + 1, used, acc.clone() * a[(row, col)].clone());
                used[row] = false;
            }
        }
        total
    }
    Ok(rec(a, 0, &mut vec![false; n], E::one()))
}

/// Ryser's inclusion–exclusion formula with Gray-code column updates.
pub fn permanent_ryser<E: Num + Clone + Send + Sync>(a: &Matrix<E>) -> Result<E> {
    let n = a.dim();
    if n > RYSER_MAX {
        return Err(Error::size("Ryser permanent dimension", n, RYSER_MAX));
    }
    if n == 0 {
        return Ok(E::one());
    }
    let total_steps: u64 = 1 << n;
    let sum = if n >= RYSER_PARALLEL_FROM {
        let blocks = 1u64 << RYSER_BLOCKS_LOG2;
        let len = total_steps / blocks;
        let parts: Vec<E> = (0..blocks)
            .into_par_iter()
            .map(|b| ryser_block(a, (b * len).max(1), (b + 1) * len))
            .collect();
        parts.into_iter().fold(E::zero(), |acc, x| acc + x)
    } else {
        ryser_block(a, 1, total_steps)
    };
    Ok(if n % 2 == 1 { E::zero() - sum } else { sum })
}

/// `Σ (-1)^{|S|} ∏_i Σ_{j∈S} a_ij` over the Gray-code subsets `g(k)`, `k ∈ [start, end)`.
fn ryser_block<E: Num + Clone>(a: &Matrix<E>, start: u64, end: u64) -> E {
    let n = a.dim();
    let gray = |k: u64| k ^ (k >> 1);
    let mut rowsum = vec![E::zero(); n];
    let g0 = gray(start - 1);
    for j in 0..n {
        if g0 >> j & 1 == 1 {
            for (i, r) in rowsum.iter_mut().enumerate() {
                *r = r.clone() + a[(i, j)].clone();
            }
        }
    }
    let mut total = E::zero();
    for k in start..end {
        let j = k.trailing_zeros() as usize;
        let g = gray(k);
        if g >> j & 1 == 1 {
            for (i, r) in rowsum.iter_mut().enumerate() {
                *r = r.clone() + a[(i, j)].clone();
            }
        } else {
            for (i, r) in rowsum.iter_mut().enumerate() {
                *r = r.clone() - a[(i, j)].clone();
            }
        }
        let prod = rowsum.iter().fold(E::one(), |acc, r| acc * r.clone());
        total = if g.count_ones() % 2 == 1 { total - prod } else { total + prod };
    }
    total
}

/// Block expansion along the first `k` rows:
/// `Σ_{|S|=k} per(A[0..k | S]) · per(A[k..n | Sᶜ])`.
pub fn permanent_laplace<E: Num + Clone + Send + Sync>(a: &Matrix<E>, k: usize) -> Result<E> {
    let n = a.dim();
    if k == 0 || k >= n {
        return Err(Error::arg(format!("row split {k} must satisfy 1 <= k < {n}")));
    }
    let top: Vec<usize> = (0..k).collect();
    let bottom: Vec<usize> = (k..n).collect();
    let mut total = E::zero();
    for subset in combinations(n, k) {
        let rest: Vec<usize> = (0..n).filter(|c| !subset.contains(c)).collect();
        let p_top = permanent_ryser(&a.select(&top, &subset))?;
        if p_top.is_zero() {
            continue;
        }
        total = total + p_top * permanent_ryser(&a.select(&bottom, &rest))?;
    }
    Ok(total)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Permanent for complex matrices, choosing the evaluator by size.
pub fn permanent<T: Real>(a: &CMatrix<T>) -> Result<num_complex::Complex<T>> {
    permanent_ryser(a)
}

/// Absolute threshold below which `per(A)` counts as zero:
/// `1e-12 · max(1, ∏_j max_i |a_ij|)`.
pub fn zero_threshold<T: Real>(a: &CMatrix<T>) -> T {
    let scale = a.column_max_norms().into_iter().fold(T::one(), |acc, x| acc * x);
    T::lit(ZERO_TOLERANCE) * scale.max(T::one())
}

pub fn is_negligible<T: Real>(value: num_complex::Complex<T>, a: &CMatrix<T>) -> bool {
    value.norm() < zero_threshold(a)
}

/// True when the zero pattern alone forces the permanent to vanish, i.e. the
/// bipartite graph of nonzero entries has no perfect matching.
pub fn structurally_zero(nonzero: &Matrix<bool>) -> bool {
    let n = nonzero.dim();
    let mut match_of_col: Vec<Option<usize>> = vec![None; n];
    fn augment(row: usize, nz: &Matrix<bool>, seen: &mut [bool], m: &mut [Option<usize>]) -> bool {
        for col in 0..nz.dim() {
            if nz[(row, col)] && !seen[col] {
                seen[col] = true;
                if m[col].is_none_or(|r| augment(r, nz, seen, m)) {
                    m[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    (0..n).any(|row| !augment(row, nonzero, &mut vec![false; n], &mut match_of_col))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn naive_examples() {
        let id = Matrix::<i64>::identity(3);
        assert_eq!(permanent_naive(&id).unwrap(), 1);
        let ones = Matrix::from_fn(3, |_, _| 1i64);
        assert_eq!(permanent_naive(&ones).unwrap(), 6);
        let m = Matrix::from_rows(vec![vec![2i64, 3], vec![5, 7]]).unwrap();
        assert_eq!(permanent_naive(&m).unwrap(), 2 * 7 + 3 * 5);
        assert!(permanent_naive(&Matrix::<i64>::identity(10)).is_err());
        assert_eq!(permanent_naive(&Matrix::<i64>::identity(0)).unwrap(), 1);
    }

    #[test]
    fn ryser_integer_cases() {
        for n in 0..=8usize {
            let ones = Matrix::from_fn(n, |_, _| 1i64);
            assert_eq!(permanent_ryser(&ones).unwrap(), (1..=n as i64).product::<i64>());
        }
        let m = Matrix::from_fn(5, |i, j| ((i * 7 + j * 3) % 5) as i64 - 2);
        assert_eq!(permanent_ryser(&m).unwrap(), permanent_naive(&m).unwrap());
    }

    #[test]
    fn ryser_split_matches_serial() {
        // n = 20 exercises the block partition; diagonal-dominant matrix with known structure.
        let n = 20;
        let a = CMatrix::from_fn(n, |i, j| if i == j { c(1.0, 0.0) } else if j == (i + 1) % n { c(0.5, 0.0) } else { c(0.0, 0.0) });
        // per = 1 + 0.5^n for the cyclic bidiagonal pattern.
        let p = permanent_ryser(&a).unwrap();
        assert!((p - c(1.0 + 0.5f64.powi(n as i32), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn laplace_block_diagonal_and_errors() {
        let a = CMatrix::from_rows(vec![
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)],
            vec![c(0.5, 0.0), c(0.0, -1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
        ])
        .unwrap();
        let b = a.select(&[0, 1], &[0, 1]);
        let expected = permanent_naive(&b).unwrap() * c(3.0, 0.0);
        assert!((permanent_laplace(&a, 2).unwrap() - expected).norm() < 1e-14);
        assert!(permanent_laplace(&a, 0).is_err());
        assert!(permanent_laplace(&a, 3).is_err());
    }

    #[test]
    fn zero_block_forces_zero() {
        // Rows 0..2 vanish on columns 0..2: a 2×3 zero block in a 4×4 matrix.
        let a = Matrix::from_fn(4, |i, j| if i < 2 && j < 3 { 0i64 } else { (i + 2 * j + 1) as i64 });
        assert_eq!(permanent_laplace(&a, 2).unwrap(), 0);
        assert!(structurally_zero(&a.map(|x| *x != 0)));
        assert!(!structurally_zero(&Matrix::from_fn(4, |i, j| i == j)));
    }

    #[test]
    fn combination_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
    }
}
