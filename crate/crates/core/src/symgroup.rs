//! Permutations of `N` photons, cycle structure, block subgroups and the
//! cycle index polynomial.
//!
//! Composition convention: `(σ₁σ₂)(α) = σ₁(σ₂(α))`, see [`Permutation::compose`].
//! Enumerations are in lexicographic order of image arrays, so the identity
//! comes first and the position in [`enumerate`] is the canonical index used
//! by every `N!`-indexed structure in the crate.

use std::fmt;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap on full enumeration of `S_N`.
pub const MAX_ENUMERATION: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::arg(format!("{images:?} is not a permutation of 0..{n}")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// Transposition of `a` and `b` in `S_n`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(a, b);
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, alpha: usize) -> usize {
        self.images[alpha]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`, i.e. `α ↦ self(other(α))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Permutation { images: other.images.iter().map(|&a| self.images[a]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.len()];
        for (a, &b) in self.images.iter().enumerate() {
            images[b] = a;
        }
        Permutation { images }
    }

    /// Disjoint cycles, each starting at its smallest element and listed as
    /// `α → σ(α) → σ²(α) → …`; cycles ordered by starting element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut a = self.images[start];
            while a != start {
                seen[a] = true;
                cycle.push(a);
                a = self.images[a];
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut counts = vec![0; self.len()];
        for c in self.cycles() {
            counts[c.len() - 1] += 1;
        }
        CycleType { counts }
    }

    /// Position of this permutation in [`enumerate`] (Lehmer code).
    pub fn lex_index(&self) -> usize {
        let n = self.len();
        let mut index = 0;
        for i in 0..n {
            let smaller = self.images[i + 1..].iter().filter(|&&x| x < self.images[i]).count();
            index = index * (n - i) + smaller;
        }
        index
    }

    /// Inverse of [`Permutation::lex_index`].
    pub fn from_lex_index(n: usize, mut index: usize) -> Permutation {
        let mut digits = vec![0; n];
        for i in (0..n).rev() {
            let base = n - i;
            digits[i] = index % base;
            index /= base;
        }
        let mut pool: Vec<usize> = (0..n).collect();
        Permutation { images: digits.into_iter().map(|d| pool.remove(d)).collect() }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.images.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// `(C_1, …, C_N)` with `C_k` the number of `k`-cycles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleType {
    counts: Vec<usize>,
}

impl CycleType {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let degree: usize = counts.iter().enumerate().map(|(k, c)| (k + 1) * c).sum();
        if degree != counts.len() {
            return Err(Error::arg(format!("cycle counts {counts:?} do not partition {}", counts.len())));
        }
        Ok(CycleType { counts })
    }

    pub fn identity(n: usize) -> Self {
        let mut counts = vec![0; n];
        if n > 0 {
            counts[0] = n;
        }
        CycleType { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn degree(&self) -> usize {
        self.counts.len()
    }

    /// `C_k` for `k ≥ 1`.
    pub fn count(&self, k: usize) -> usize {
        self.counts.get(k - 1).copied().unwrap_or(0)
    }

    /// `∏_k k^{C_k} C_k!`, the centralizer order.
    pub fn centralizer_order(&self) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| ((k + 1) as f64).powi(c as i32) * factorial(c))
            .product()
    }

    /// Number of permutations with this cycle type, `N!/∏ k^{C_k} C_k!`.
    pub fn class_size(&self) -> f64 {
        factorial(self.degree()) / self.centralizer_order()
    }

    /// All cycle types of degree `n` (integer partitions), in a fixed order.
    pub fn all(n: usize) -> Vec<CycleType> {
        fn rec(remaining: usize, max_part: usize, counts: &mut Vec<usize>, out: &mut Vec<CycleType>) {
            if remaining == 0 {
                out.push(CycleType { counts: counts.clone() });
                return;
            }
            for part in (1..=max_part.min(remaining)).rev() {
                counts[part - 1] += 1;
                rec(remaining - part, part, counts, out);
                counts[part - 1] -= 1;
            }
        }
        let mut out = Vec::new();
        rec(n, n, &mut vec![0; n], &mut out);
        out
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All `N!` permutations in lexicographic order of image arrays.
pub fn enumerate(n: usize) -> Result<Vec<Permutation>> {
    if n > MAX_ENUMERATION {
        return Err(Error::size("permutation degree", n, MAX_ENUMERATION));
    }
    let mut out = Vec::with_capacity(factorial(n) as usize);
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation { images: current.clone() });
        if !next_lex(&mut current) {
            break;
        }
    }
    Ok(out)
}

fn next_lex(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// `S_{n₁} ⊗ … ⊗ S_{n_M}` acting on the photon list `k₁ ≤ … ≤ k_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSubgroup {
    block_sizes: Vec<usize>,
}

impl ModeSubgroup {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        ModeSubgroup { block_sizes }
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn degree(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// `μ(n) = ∏ n_k!`.
    pub fn order(&self) -> usize {
        self.block_sizes.iter().map(|&b| (1..=b).product::<usize>()).product()
    }

    /// Block label of every position.
    pub fn labels(&self) -> Vec<usize> {
        self.block_sizes.iter().enumerate().flat_map(|(k, &b)| std::iter::repeat_n(k, b)).collect()
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        let labels = self.labels();
        p.len() == labels.len() && (0..p.len()).all(|a| labels[p.apply(a)] == labels[a])
    }

    /// Members in lexicographic order.
    pub fn members(&self) -> Result<Vec<Permutation>> {
        let n = self.degree();
        if n > MAX_ENUMERATION {
            return Err(Error::size("permutation degree", n, MAX_ENUMERATION));
        }
        let labels = self.labels();
        let mut out = vec![Vec::with_capacity(n)];
        for a in 0..n {
            let block: Vec<usize> = (0..n).filter(|&b| labels[b] == labels[a]).collect();
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    block
                        .iter()
                        .filter(|b| !prefix.contains(b))
                        .map(|&b| {
                            let mut p = prefix.clone();
                            p.push(b);
                            p
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        Ok(out.into_iter().map(|images| Permutation { images }).collect())
    }
}

pub fn subgroup_members(occupation: &[usize]) -> Result<Vec<Permutation>> {
    ModeSubgroup::new(occupation.to_vec()).members()
}

/// Builds a small integer in any numeric ring by binary doubling.
fn ring_int<R: Num + Clone>(mut n: u64) -> R {
    let mut acc = R::zero();
    let mut power = R::one();
    while n > 0 {
        if n & 1 == 1 {
            acc = acc + power.clone();
        }
        power = power.clone() + power;
        n >>= 1;
    }
    acc
}

fn pow<R: Num + Clone>(base: &R, e: usize) -> R {
    (0..e).fold(R::one(), |acc, _| acc * base.clone())
}

/// `∏_k a_k^{C_k}` for a cycle type.
pub fn cycle_monomial<R: Num + Clone>(ct: &CycleType, a: &[R]) -> R {
    ct.counts.iter().enumerate().fold(R::one(), |acc, (k, &c)| acc * pow(&a[k], c))
}

/// Cycle index `Z_N(a₁,…,a_N) = (1/N!) Σ_σ ∏ a_k^{C_k(σ)}`, summed over cycle
/// types with their class sizes. Works in any field, e.g. exact rationals.
pub fn cycle_index<R: Num + Clone>(n: usize, a: &[R]) -> Result<R> {
    if n > MAX_ENUMERATION {
        return Err(Error::size("cycle index degree", n, MAX_ENUMERATION));
    }
    if a.len() != n {
        return Err(Error::arg(format!("cycle index of degree {n} needs {n} variables, got {}", a.len())));
    }
    let total = CycleType::all(n).iter().fold(R::zero(), |acc, ct| {
        acc + ring_int::<R>(ct.class_size().round() as u64) * cycle_monomial(ct, a)
    });
    Ok(total / ring_int(factorial(n) as u64))
}
