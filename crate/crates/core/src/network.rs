//! Unitary network matrices, occupation vectors and output enumeration.
//! Mode indices are 0-based everywhere.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::orthonormalize_columns;
use crate::matrix::CMatrix;
use crate::Real;

/// Unitarity tolerance for matrices read from user files.
pub const USER_UNITARITY_TOL: f64 = 1e-8;
/// Unitarity tolerance for generated matrices.
pub const GENERATED_UNITARITY_TOL: f64 = 1e-12;
pub const MAX_OUTPUTS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkMatrix<T> {
    u: CMatrix<T>,
}

impl<T: Real> NetworkMatrix<T> {
    /// Wraps `u` after checking `U†U = I` to within `tol` (max-entry deviation).
    pub fn new(u: CMatrix<T>, tol: f64) -> Result<Self> {
        if u.dim() == 0 {
            return Err(Error::arg("network needs at least one mode"));
        }
        if !u.is_finite() {
            return Err(Error::arg("network matrix has non-finite entries"));
        }
        let deviation = u.unitarity_deviation().as_f64();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation, tolerance: tol });
        }
        Ok(NetworkMatrix { u })
    }

    pub fn from_user(u: CMatrix<T>) -> Result<Self> {
        Self::new(u, USER_UNITARITY_TOL)
    }

    /// `U_kl = exp(2πi kl/M)/√M`.
    pub fn fourier(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::arg("Fourier network needs M >= 1"));
        }
        let mf = T::from_usize_exact(m);
        let norm = mf.sqrt().recip();
        let u = CMatrix::from_fn(m, |k, l| {
            let phase = T::TAU() * T::from_usize_exact((k * l) % m) / mf;
            Complex::from_polar(norm, phase)
        });
        Self::new(u, GENERATED_UNITARITY_TOL)
    }

    /// Haar-random unitary: Gram–Schmidt on a complex Ginibre matrix, which
    /// fixes the phases of the triangular factor to be positive.
    pub fn random_unitary(m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::arg("random network needs M >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = CMatrix::from_fn(m, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::lit(re), T::lit(im))
        });
        Self::new(orthonormalize_columns(&z), GENERATED_UNITARITY_TOL)
    }

    pub fn identity(m: usize) -> Self {
        NetworkMatrix { u: CMatrix::identity(m) }
    }

    pub fn modes(&self) -> usize {
        self.u.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.u
    }

    pub fn get(&self, k: usize, l: usize) -> Complex<T> {
        self.u[(k, l)]
    }

    pub fn unitarity_deviation(&self) -> T {
        self.u.unitarity_deviation()
    }

    /// `U[n|m]`: row `α` is input mode `k_α`, column `β` is output mode `l_β`.
    pub fn submatrix(&self, input: &OccupationVector, output: &OccupationVector) -> Result<CMatrix<T>> {
        check_pair(self.modes(), input, output)?;
        Ok(self.u.select(&input.mode_list(), &output.mode_list()))
    }
}

pub(crate) fn check_pair(m: usize, input: &OccupationVector, output: &OccupationVector) -> Result<()> {
    if input.modes() != m || output.modes() != m {
        return Err(Error::arg(format!(
            "occupation vectors have {} and {} modes, network has {m}",
            input.modes(),
            output.modes()
        )));
    }
    if input.total() != output.total() {
        return Err(Error::arg(format!(
            "input has {} photons but output has {}",
            input.total(),
            output.total()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector {
    counts: Vec<usize>,
}

impl OccupationVector {
    pub fn new(counts: Vec<usize>) -> Self {
        OccupationVector { counts }
    }

    /// One photon in each of the first `n` of `m` modes.
    pub fn first_modes(m: usize, n: usize) -> Self {
        OccupationVector { counts: (0..m).map(|k| usize::from(k < n)).collect() }
    }

    /// Occupation from a list of (possibly repeated) mode indices.
    pub fn from_mode_list(m: usize, modes: &[usize]) -> Result<Self> {
        let mut counts = vec![0; m];
        for &k in modes {
            if k >= m {
                return Err(Error::arg(format!("mode {k} out of range for {m} modes")));
            }
            counts[k] += 1;
        }
        Ok(OccupationVector { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `μ(n) = ∏ n_k!`.
    pub fn multiplicity(&self) -> usize {
        self.counts.iter().map(|&c| (1..=c).product::<usize>()).product()
    }

    /// Ascending mode list with repetitions (`k₁ ≤ … ≤ k_N`).
    pub fn mode_list(&self) -> Vec<usize> {
        self.counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect()
    }

    pub fn is_single_occupancy(&self) -> bool {
        self.counts.iter().all(|&c| c <= 1)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for OccupationVector {
    type Err = Error;

    /// Parses `"1,1,0"`.
    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| Error::arg(format!("bad occupation entry {p:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if counts.is_empty() {
            return Err(Error::arg("empty occupation vector"));
        }
        Ok(OccupationVector { counts })
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All outputs with `N` photons in `M` modes; the first mode's count runs
/// from `N` down to 0, then recursively, so `(2,0),(1,1),(0,2)` for `M=N=2`.
pub fn enumerate_outputs(m: usize, n: usize) -> Result<Vec<OccupationVector>> {
    if m == 0 {
        return Err(Error::arg("need at least one mode"));
    }
    let count = binomial(m + n - 1, n).round();
    if count > MAX_OUTPUTS as f64 {
        return Err(Error::size("output configurations", count as usize, MAX_OUTPUTS));
    }
    fn rec(mode: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<OccupationVector>) {
        let m = cur.len();
        if mode == m - 1 {
            cur[mode] = left;
            out.push(OccupationVector { counts: cur.clone() });
            return;
        }
        for c in (0..=left).rev() {
            cur[mode] = c;
            rec(mode + 1, left - c, cur, out);
        }
    }
    let mut out = Vec::with_capacity(count as usize);
    rec(0, n, &mut vec![0; m], &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_examples() {
        let f2 = NetworkMatrix::<f64>::fourier(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f2.get(1, 1) - Complex::new(-s, 0.0)).norm() < 1e-15);
        assert_eq!(NetworkMatrix::<f64>::fourier(1).unwrap().get(0, 0), Complex::new(1.0, 0.0));
        assert!(NetworkMatrix::<f64>::fourier(3).unwrap().unitarity_deviation() < 1e-15);
    }

    #[test]
    fn random_unitary_is_deterministic() {
        let a = NetworkMatrix::<f64>::random_unitary(4, 7).unwrap();
        let b = NetworkMatrix::<f64>::random_unitary(4, 7).unwrap();
        let c = NetworkMatrix::<f64>::random_unitary(4, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.unitarity_deviation() < 1e-12);
        assert!(a.matrix().max_abs_diff(c.matrix()) > 1e-3);
    }

    #[test]
    fn submatrix_layout() {
        let f3 = NetworkMatrix::<f64>::fourier(3).unwrap();
        let n = OccupationVector::new(vec![1, 1, 1]);
        assert_eq!(f3.submatrix(&n, &n).unwrap(), f3.matrix().clone());
        let m = OccupationVector::new(vec![2, 1, 0]);
        let sub = f3.submatrix(&n, &m).unwrap();
        for r in 0..3 {
            assert_eq!(sub[(r, 0)], f3.get(r, 0));
            assert_eq!(sub[(r, 1)], f3.get(r, 0));
            assert_eq!(sub[(r, 2)], f3.get(r, 1));
        }
        let bad = OccupationVector::new(vec![1, 0, 0]);
        assert!(f3.submatrix(&n, &bad).is_err());
    }

    #[test]
    fn output_enumeration() {
        let outs = enumerate_outputs(2, 2).unwrap();
        let v: Vec<_> = outs.iter().map(|o| o.counts().to_vec()).collect();
        assert_eq!(v, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_outputs(3, 1).unwrap().len(), 3);
        assert_eq!(enumerate_outputs(4, 3).unwrap().len(), 20);
        assert!(enumerate_outputs(30, 12).is_err());
    }

    #[test]
    fn occupation_parsing() {
        let n: OccupationVector = "1, 2,0".parse().unwrap();
        assert_eq!(n.counts(), &[1, 2, 0]);
        assert_eq!(n.multiplicity(), 2);
        assert_eq!(n.mode_list(), vec![0, 1, 1]);
        assert!("1,x".parse::<OccupationVector>().is_err());
    }
}
