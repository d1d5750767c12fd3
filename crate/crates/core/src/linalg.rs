//! Small dense linear-algebra kernels: Hermitian eigendecomposition,
//! PSD square roots, Gram–Schmidt and Gauss–Hermite nodes.

use num_complex::Complex;
use num_traits::Zero;

use crate::matrix::CMatrix;
use crate::Real;

/// Eigendecomposition `A = V diag(values) V†` of a Hermitian matrix,
/// eigenvalues ascending, eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi. Only the Hermitian part of `a` is used.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> HermitianEigen<T> {
    let n = a.dim();
    let half = T::lit(0.5);
    let mut m = CMatrix::from_fn(n, |i, j| (a[(i, j)] + a[(j, i)].conj()).scale(half));
    let mut v = CMatrix::<T>::identity(n);
    let frob = m.as_slice().iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let tol = T::epsilon() * frob.max(T::min_positive_value());

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= T::min_positive_value() {
                    continue;
                }
                let phase = apq / b;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (b + b);
                let sign = if tau >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let conj_phase = phase.conj();
                // Rotation J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on (p, q); m <- J† m J, v <- v J.
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = akp.scale(c) - akq * conj_phase.scale(s);
                    m[(k, q)] = akp.scale(s) + akq * conj_phase.scale(c);
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp.scale(c) - vkq * conj_phase.scale(s);
                    v[(k, q)] = vkp.scale(s) + vkq * conj_phase.scale(c);
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = apk.scale(c) - aqk * phase.scale(s);
                    m[(q, k)] = apk.scale(s) + aqk * phase.scale(c);
                }
                m[(p, q)] = Complex::zero();
                m[(q, p)] = Complex::zero();
                m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
                m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    HermitianEigen {
        values: order.iter().map(|&i| m[(i, i)].re).collect(),
        vectors: CMatrix::from_fn(n, |r, c| v[(r, order[c])]),
    }
}

pub fn min_eigenvalue<T: Real>(a: &CMatrix<T>) -> T {
    hermitian_eigen(a).values.first().copied().unwrap_or(T::zero())
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues
/// (numerical noise) are clipped to zero.
pub fn psd_sqrt<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let eig = hermitian_eigen(a);
    let n = a.dim();
    let roots: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    CMatrix::from_fn(n, |i, j| {
        (0..n).fold(Complex::zero(), |acc, k| acc + eig.vectors[(i, k)] * eig.vectors[(j, k)].conj() * roots[k])
    })
}

/// Orthonormalizes the columns of `a` (modified Gram–Schmidt, two passes).
/// The implied triangular factor has a positive real diagonal.
pub fn orthonormalize_columns<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.dim();
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: Complex<T> =
                    cols[k].iter().zip(&cols[j]).fold(Complex::zero(), |acc, (q, x)| acc + q.conj() * x);
                let qk = cols[k].clone();
                for (x, q) in cols[j].iter_mut().zip(&qk) {
                    *x = *x - proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for x in cols[j].iter_mut() {
            *x = x.unscale(norm);
        }
    }
    CMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Gauss–Hermite rule for weight `e^{-x²}`: nodes ascending, weights summing to `√π`.
///
/// Nodes are located by Sturm-sequence bisection on the Jacobi matrix
/// (off-diagonal `√(k/2)`) and polished with Newton steps on the orthonormal
/// recurrence, which also yields the weights.
pub fn gauss_hermite<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let nf = T::from_usize_exact(n);
    let off_sq: Vec<T> = (1..n).map(|k| T::from_usize_exact(k) * half).collect();
    // Number of eigenvalues strictly below x.
    let below = |x: T| -> usize {
        let tiny = T::min_positive_value().sqrt();
        let mut q = -x;
        let mut count = usize::from(q < T::zero());
        for e2 in &off_sq {
            if q.abs() < tiny {
                q = tiny;
            }
            q = -x - *e2 / q;
            count += usize::from(q < T::zero());
        }
        count
    };
    // Orthonormal recurrence: (p_n(z), p_{n-1}(z), rescalings). Each rescaling
    // divides both values by `big`; far-out nodes otherwise overflow.
    let big = T::lit(1e30);
    let recur = |z: T| -> (T, T, i32) {
        let mut p1 = T::lit(0.751_125_544_464_942_5);
        let mut p2 = T::zero();
        let mut scaled = 0;
        for j in 0..n {
            let p3 = p2;
            p2 = p1;
            let jf = T::from_usize_exact(j);
            p1 = z * (two / (jf + T::one())).sqrt() * p2 - (jf / (jf + T::one())).sqrt() * p3;
            if p1.abs() > big {
                p1 = p1 / big;
                p2 = p2 / big;
                scaled += 1;
            }
        }
        (p1, p2, scaled)
    };
    let bound = (two * nf + T::one()).sqrt() * T::lit(1.5) + T::one();
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    for k in 0..n {
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = half * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = half * (lo + hi);
        for _ in 0..3 {
            let (p1, p2, _) = recur(z);
            let pp = (two * nf).sqrt() * p2;
            if pp == T::zero() {
                break;
            }
            let step = p1 / pp;
            if step.abs() < (hi - lo).abs() + T::epsilon() * z.abs().max(T::one()) {
                z = z - step;
            }
        }
        let (_, p2, scaled) = recur(z);
        let pp = (two * nf).sqrt() * p2;
        x[k] = z;
        w[k] = if pp == T::zero() { T::zero() } else { two / (pp * pp) / big.powi(2 * scaled) };
    }
    if n % 2 == 1 {
        x[n / 2] = T::zero();
    }
    // enforce exact symmetry
    for k in 0..n / 2 {
        let xs = half * (x[n - 1 - k] - x[k]);
        let ws = half * (w[k] + w[n - 1 - k]);
        x[k] = -xs;
        x[n - 1 - k] = xs;
        w[k] = ws;
        w[n - 1 - k] = ws;
    }
    (x, w)
}
