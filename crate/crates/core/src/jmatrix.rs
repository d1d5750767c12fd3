//! The partial-indistinguishability matrix
//! `J(σ₁,σ₂) = ∏_α ⟨φ_{σ₁(α)}|Γ_{l_α}|φ_{σ₂(α)}⟩` (product inputs) and the
//! measures derived from it.
//!
//! Rows and columns are indexed by permutations in canonical (lexicographic)
//! order. Slot `α` is the `α`-th entry of the output mode list `l₁ ≤ … ≤ l_N`,
//! and the detector of that output mode acts there.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;
use crate::matrix::CMatrix;
use crate::network::OccupationVector;
use crate::spectral::{mat_mul_rect, overlap, trace_rect, transfer_matrix, DetectorModel, MixedState, PureState};
use crate::symgroup::{enumerate, factorial, CycleType, ModeSubgroup, Permutation, MAX_ENUMERATION};
use crate::Real;

pub const DENSE_MAX: usize = 6;
/// Largest `N` the cycle-compressed purity path accepts.
pub const CYCLE_PURITY_MAX: usize = 30;
pub const PSD_TOLERANCE: f64 = -1e-9;

/// Which output slots a J-matrix belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputContext {
    /// Identical detectors everywhere: valid for every output.
    Any,
    /// Built for this output mode list.
    Slots(Vec<usize>),
}

impl OutputContext {
    pub fn admits(&self, l_list: &[usize]) -> bool {
        match self {
            OutputContext::Any => true,
            OutputContext::Slots(s) => s == l_list,
        }
    }
}

type Evaluator<T> = Arc<dyn Fn(&Permutation, &Permutation) -> Complex<T> + Send + Sync>;

#[derive(Clone)]
enum Storage<T> {
    Dense(Vec<Complex<T>>),
    Cycle(HashMap<CycleType, Complex<T>>),
    Lazy(Evaluator<T>),
}

#[derive(Clone)]
pub struct JMatrix<T> {
    n: usize,
    storage: Storage<T>,
    context: OutputContext,
}

impl<T: Real> fmt::Debug for JMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.storage {
            Storage::Dense(_) => "dense",
            Storage::Cycle(_) => "cycle-compressed",
            Storage::Lazy(_) => "lazy",
        };
        f.debug_struct("JMatrix").field("n", &self.n).field("storage", &kind).field("context", &self.context).finish()
    }
}

impl<T: Real> JMatrix<T> {
    /// Dense matrix from entries in canonical order (row-major, `N!×N!`).
    pub fn from_dense(n: usize, entries: Vec<Complex<T>>, context: OutputContext) -> Result<Self> {
        if n > DENSE_MAX {
            return Err(Error::size("dense J-matrix photon number", n, DENSE_MAX));
        }
        let dim = factorial(n) as usize;
        if entries.len() != dim * dim {
            return Err(Error::arg(format!("dense J for N={n} needs {} entries, got {}", dim * dim, entries.len())));
        }
        Ok(JMatrix { n, storage: Storage::Dense(entries), context })
    }

    /// Entries given as a function of the cycle type of `σ₂σ₁⁻¹`.
    pub fn from_cycle_function(n: usize, f: impl Fn(&CycleType) -> Complex<T>) -> Self {
        let map = CycleType::all(n).into_iter().map(|ct| (ct.clone(), f(&ct))).collect();
        JMatrix { n, storage: Storage::Cycle(map), context: OutputContext::Any }
    }

    pub fn from_evaluator(
        n: usize,
        context: OutputContext,
        f: impl Fn(&Permutation, &Permutation) -> Complex<T> + Send + Sync + 'static,
    ) -> Self {
        JMatrix { n, storage: Storage::Lazy(Arc::new(f)), context }
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    /// `N!`.
    pub fn dimension(&self) -> usize {
        factorial(self.n) as usize
    }

    pub fn context(&self) -> &OutputContext {
        &self.context
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn is_cycle_compressed(&self) -> bool {
        matches!(self.storage, Storage::Cycle(_))
    }

    /// Cycle-type table of a cycle-compressed matrix.
    pub fn cycle_values(&self) -> Option<&HashMap<CycleType, Complex<T>>> {
        match &self.storage {
            Storage::Cycle(m) => Some(m),
            _ => None,
        }
    }

    pub fn entry(&self, s1: &Permutation, s2: &Permutation) -> Complex<T> {
        match &self.storage {
            Storage::Dense(e) => e[s1.lex_index() * self.dimension() + s2.lex_index()],
            Storage::Cycle(m) => m[&s2.compose(&s1.inverse()).cycle_type()],
            Storage::Lazy(f) => f(s1, s2),
        }
    }

    /// Entry by canonical indices (dense storage is read directly).
    /// Row-major entries in canonical order, when stored densely.
    pub fn dense_entries(&self) -> Option<&[Complex<T>]> {
        match &self.storage {
            Storage::Dense(e) => Some(e),
            _ => None,
        }
    }

    pub fn entry_at(&self, i: usize, j: usize) -> Complex<T> {
        match &self.storage {
            Storage::Dense(e) => e[i * self.dimension() + j],
            _ => self.entry(&Permutation::from_lex_index(self.n, i), &Permutation::from_lex_index(self.n, j)),
        }
    }

    /// Materializes the full `N!×N!` matrix (N ≤ 6).
    pub fn to_matrix(&self) -> Result<CMatrix<T>> {
        if self.n > DENSE_MAX {
            return Err(Error::size("dense J-matrix photon number", self.n, DENSE_MAX));
        }
        if let Storage::Dense(e) = &self.storage {
            return CMatrix::new(self.dimension(), e.clone());
        }
        let perms = enumerate(self.n)?;
        let dim = perms.len();
        let rows: Vec<Vec<Complex<T>>> =
            perms.par_iter().map(|s1| perms.iter().map(|s2| self.entry(s1, s2)).collect()).collect();
        CMatrix::new(dim, rows.into_iter().flatten().collect())
    }

    pub fn to_dense(&self) -> Result<JMatrix<T>> {
        let m = self.to_matrix()?;
        Ok(JMatrix { n: self.n, storage: Storage::Dense(m.as_slice().to_vec()), context: self.context.clone() })
    }

    pub fn trace(&self) -> Result<Complex<T>> {
        let dim = self.dimension();
        if self.n > MAX_ENUMERATION {
            return Err(Error::size("permutation degree", self.n, MAX_ENUMERATION));
        }
        Ok((0..dim).fold(Complex::zero(), |acc, i| acc + self.entry_at(i, i)))
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(min_eigenvalue(&self.to_matrix()?))
    }

    pub fn is_psd(&self) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= T::lit(PSD_TOLERANCE))
    }

    /// Max over all pairs of `|J(π₁σ₁, π₂σ₂) − J(σ₁,σ₂)|` for `π₁, π₂` in the block subgroup.
    pub fn subgroup_asymmetry(&self, input: &OccupationVector) -> Result<T> {
        let members = ModeSubgroup::new(input.counts().to_vec()).members()?;
        let perms = enumerate(self.n)?;
        let mut worst = T::zero();
        for s1 in &perms {
            for s2 in &perms {
                let base = self.entry(s1, s2);
                for p1 in &members {
                    for p2 in &members {
                        worst = worst.max((self.entry(&p1.compose(s1), &p2.compose(s2)) - base).norm());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Flips the sign of one off-diagonal entry pair. Fault injection for harness tests.
    pub fn with_negated_entry(&self, i: usize, j: usize) -> Result<JMatrix<T>> {
        let mut m = self.to_matrix()?;
        m[(i, j)] = -m[(i, j)];
        if i != j {
            m[(j, i)] = -m[(j, i)];
        }
        JMatrix::from_dense(self.n, m.as_slice().to_vec(), self.context.clone())
    }
}

fn check_slots<T>(n: usize, detectors: &[DetectorModel<T>], context: &OutputContext) -> Result<()> {
    if detectors.len() != n {
        return Err(Error::arg(format!("{n} photons but {} slot detectors", detectors.len())));
    }
    if let OutputContext::Slots(s) = context {
        if s.len() != n {
            return Err(Error::arg(format!("{n} photons but output context has {} slots", s.len())));
        }
    }
    Ok(())
}

/// Symmetric fill of a dense matrix from an entry function over canonical
/// index pairs `i ≤ j`; rows are computed in parallel.
fn dense_hermitian<T: Real>(perms: &[Permutation], f: impl Fn(&Permutation, &Permutation) -> Complex<T> + Sync) -> Vec<Complex<T>> {
    let dim = perms.len();
    let upper: Vec<Vec<Complex<T>>> =
        (0..dim).into_par_iter().map(|i| (i..dim).map(|j| f(&perms[i], &perms[j])).collect()).collect();
    let mut out = vec![Complex::zero(); dim * dim];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            if i == j {
                out[i * dim + i] = Complex::new(v.re, T::zero());
            } else {
                out[i * dim + j] = v;
                out[j * dim + i] = v.conj();
            }
        }
    }
    out
}

/// `J` for pure product inputs, evaluated entrywise.
/// `states[a]` is the photon in input slot `a`; `detectors[α]` acts on output slot `α`.
pub fn build_pure<T: Real>(
    states: &[PureState<T>],
    detectors: &[DetectorModel<T>],
    context: OutputContext,
) -> Result<JMatrix<T>> {
    let n = states.len();
    check_slots(n, detectors, &context)?;
    if n > MAX_ENUMERATION {
        return Err(Error::size("permutation degree", n, MAX_ENUMERATION));
    }
    // table[α][a][b] = ⟨φ_a|Γ_α|φ_b⟩
    let mut table = vec![vec![vec![Complex::zero(); n]; n]; n];
    for (alpha, det) in detectors.iter().enumerate() {
        if alpha > 0 && detectors[alpha - 1] == *det {
            table[alpha] = table[alpha - 1].clone();
            continue;
        }
        for a in 0..n {
            for b in a..n {
                let v = overlap(&states[a], det, &states[b])?;
                table[alpha][a][b] = v;
                table[alpha][b][a] = v.conj();
            }
        }
    }
    let entry = move |s1: &Permutation, s2: &Permutation| {
        (0..s1.len()).fold(Complex::one(), |acc, alpha| acc * table[alpha][s1.apply(alpha)][s2.apply(alpha)])
    };
    if n <= DENSE_MAX {
        let perms = enumerate(n)?;
        let entries = dense_hermitian(&perms, &entry);
        JMatrix::from_dense(n, entries, context)
    } else {
        Ok(JMatrix::from_evaluator(n, context, entry))
    }
}

/// `J` for product inputs of mixed states, through the cycle decomposition of
/// `σ_R = σ₂σ₁⁻¹`: each cycle `a → σ_R(a) → …` contributes the trace
/// `Tr{Γ ρ_a Γ ρ_{σ_R(a)} …}`, with the detector of slot `σ₁⁻¹(a)` at photon `a`.
/// Component-by-component transfer amplitudes between two mixed states.
type Transfer<T> = Vec<Vec<Complex<T>>>;

pub fn build_mixed<T: Real>(
    states: &[MixedState<T>],
    detectors: &[DetectorModel<T>],
    context: OutputContext,
) -> Result<JMatrix<T>> {
    let n = states.len();
    check_slots(n, detectors, &context)?;
    if n > MAX_ENUMERATION {
        return Err(Error::size("permutation degree", n, MAX_ENUMERATION));
    }
    // transfer[α][a][b]: ρ_a → ρ_b through the detector of slot α.
    let mut transfer: Vec<Vec<Vec<Transfer<T>>>> = Vec::with_capacity(n);
    for (alpha, det) in detectors.iter().enumerate() {
        if alpha > 0 && detectors[alpha - 1] == *det {
            let prev = transfer[alpha - 1].clone();
            transfer.push(prev);
            continue;
        }
        let mut per_pair = Vec::with_capacity(n);
        for a in 0..n {
            let mut row = Vec::with_capacity(n);
            for b in 0..n {
                row.push(transfer_matrix(&states[a], det, &states[b])?);
            }
            per_pair.push(row);
        }
        transfer.push(per_pair);
    }
    // Slots with equal detectors share a label so identical cycles are computed once.
    let mut det_label = vec![0usize; n];
    for alpha in 1..n {
        det_label[alpha] = (0..alpha).find(|&b| detectors[b] == detectors[alpha]).map_or(alpha, |b| det_label[b]);
    }
    let cycle_value = move |s1: &Permutation, s2: &Permutation, memo: &mut HashMap<Vec<(usize, usize)>, Complex<T>>| {
        let inv1 = s1.inverse();
        let rel = s2.compose(&inv1);
        let mut total = Complex::one();
        for cycle in rel.cycles() {
            let key: Vec<(usize, usize)> = cycle.iter().map(|&a| (a, det_label[inv1.apply(a)])).collect();
            let v = *memo.entry(key).or_insert_with(|| {
                let slot = |a: usize| inv1.apply(a);
                let mut prod = transfer[slot(cycle[0])][cycle[0]][rel.apply(cycle[0])].clone();
                for &a in &cycle[1..] {
                    prod = mat_mul_rect(&prod, &transfer[slot(a)][a][rel.apply(a)]);
                }
                trace_rect(&prod)
            });
            total = total * v;
        }
        total
    };
    if n <= DENSE_MAX {
        let perms = enumerate(n)?;
        let dim = perms.len();
        let mut memo = HashMap::new();
        let mut entries = vec![Complex::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = cycle_value(&perms[i], &perms[j], &mut memo);
                if i == j {
                    entries[i * dim + i] = Complex::new(v.re, T::zero());
                } else {
                    entries[i * dim + j] = v;
                    entries[j * dim + i] = v.conj();
                }
            }
        }
        JMatrix::from_dense(n, entries, context)
    } else {
        let memo = std::sync::Mutex::new(HashMap::new());
        Ok(JMatrix::from_evaluator(n, context, move |s1, s2| {
            let mut guard = memo.lock().expect("memo lock");
            cycle_value(s1, s2, &mut guard)
        }))
    }
}

/// Identical sources and detectors: `J = ∏_k g_k^{C_k(σ₂σ₁⁻¹)}` with
/// `g_k = Tr{(Γρ)^k}`.
pub fn build_cycle_compressed<T: Real>(rho: &MixedState<T>, det: &DetectorModel<T>, n: usize) -> Result<JMatrix<T>> {
    if n > CYCLE_PURITY_MAX {
        return Err(Error::size("cycle-compressed photon number", n, CYCLE_PURITY_MAX));
    }
    let g: Vec<T> = (1..=n).map(|k| crate::spectral::gk_trace(rho, det, k)).collect::<Result<_>>()?;
    Ok(JMatrix::from_cycle_function(n, |ct| {
        let v = ct.counts().iter().enumerate().fold(T::one(), |acc, (k, &c)| acc * g[k].powi(c as i32));
        Complex::new(v, T::zero())
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    /// Completely indistinguishable photons.
    Indistinguishable,
    /// Photons in different input modes are orthogonal.
    Classical,
}

/// Extreme-case J. For `Indistinguishable`, `mode_states` holds the single
/// common state; for `Classical`, one state per occupied input mode in mode
/// order. `J(σ₁,σ₂) = D(σ₁)` when `σ₂σ₁⁻¹` preserves the input-mode blocks
/// (always, for the indistinguishable case), else 0, where
/// `D(σ) = ∏_α ⟨φ_{σ(α)}|Γ_α|φ_{σ(α)}⟩`.
pub fn build_extreme<T: Real>(
    kind: Extreme,
    input: &OccupationVector,
    mode_states: &[PureState<T>],
    detectors: &[DetectorModel<T>],
    context: OutputContext,
) -> Result<JMatrix<T>> {
    let n = input.total();
    check_slots(n, detectors, &context)?;
    if n > DENSE_MAX {
        return Err(Error::size("dense J-matrix photon number", n, DENSE_MAX));
    }
    let occupied: Vec<usize> = (0..input.modes()).filter(|&k| input.counts()[k] > 0).collect();
    let slot_states: Vec<PureState<T>> = match kind {
        Extreme::Indistinguishable => {
            if mode_states.len() != 1 {
                return Err(Error::arg("indistinguishable extreme takes exactly one state"));
            }
            vec![mode_states[0].clone(); n]
        }
        Extreme::Classical => {
            if mode_states.len() != occupied.len() {
                return Err(Error::arg(format!(
                    "classical extreme needs {} mode states, got {}",
                    occupied.len(),
                    mode_states.len()
                )));
            }
            input
                .mode_list()
                .iter()
                .map(|k| mode_states[occupied.iter().position(|o| o == k).expect("occupied")].clone())
                .collect()
        }
    };
    // self[α][a] = ⟨φ_a|Γ_α|φ_a⟩
    let mut diag = vec![vec![T::zero(); n]; n];
    for alpha in 0..n {
        for a in 0..n {
            diag[alpha][a] = overlap(&slot_states[a], &detectors[alpha], &slot_states[a])?.re;
        }
    }
    let labels = ModeSubgroup::new(input.counts().to_vec()).labels();
    let perms = enumerate(n)?;
    let entries = dense_hermitian(&perms, |s1, s2| {
        let rel = s2.compose(&s1.inverse());
        let in_block = kind == Extreme::Indistinguishable || (0..n).all(|a| labels[rel.apply(a)] == labels[a]);
        if !in_block {
            return Complex::zero();
        }
        Complex::new((0..n).fold(T::one(), |acc, alpha| acc * diag[alpha][s1.apply(alpha)]), T::zero())
    });
    JMatrix::from_dense(n, entries, context)
}

/// `Ĵ = D^{-1/2} J D^{-1/2}` with `D` the diagonal of `J`.
#[derive(Clone)]
pub struct ReducedJMatrix<T>(JMatrix<T>);

impl<T: Real> fmt::Debug for ReducedJMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ReducedJMatrix").field(&self.0).finish()
    }
}

impl<T: Real> ReducedJMatrix<T> {
    pub fn as_jmatrix(&self) -> &JMatrix<T> {
        &self.0
    }

    pub fn entry(&self, s1: &Permutation, s2: &Permutation) -> Complex<T> {
        self.0.entry(s1, s2)
    }

    pub fn entry_at(&self, i: usize, j: usize) -> Complex<T> {
        self.0.entry_at(i, j)
    }

    pub fn photons(&self) -> usize {
        self.0.n
    }

    /// Largest off-diagonal modulus (N ≤ 6).
    pub fn max_off_diagonal(&self) -> Result<T> {
        let m = self.0.to_matrix()?;
        let dim = m.dim();
        let mut worst = T::zero();
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        Ok(worst)
    }
}

pub fn reduce<T: Real>(j: &JMatrix<T>) -> Result<ReducedJMatrix<T>> {
    let n = j.n;
    let degenerate = |p: Permutation| Error::DegenerateDetection { permutation: p.images().to_vec() };
    match &j.storage {
        Storage::Cycle(map) => {
            let d = map[&CycleType::identity(n)].re;
            if !(d > T::zero()) {
                return Err(degenerate(Permutation::identity(n)));
            }
            let scaled = map.iter().map(|(k, v)| (k.clone(), v.unscale(d))).collect();
            Ok(ReducedJMatrix(JMatrix { n, storage: Storage::Cycle(scaled), context: j.context.clone() }))
        }
        Storage::Dense(e) => {
            let dim = j.dimension();
            let d: Vec<T> = (0..dim).map(|i| e[i * dim + i].re).collect();
            if let Some(i) = d.iter().position(|x| !(*x > T::zero())) {
                return Err(degenerate(Permutation::from_lex_index(n, i)));
            }
            let s: Vec<T> = d.iter().map(|x| x.sqrt()).collect();
            let mut out = e.clone();
            for i in 0..dim {
                for k in 0..dim {
                    out[i * dim + k] = if i == k { Complex::one() } else { e[i * dim + k].unscale(s[i] * s[k]) };
                }
            }
            Ok(ReducedJMatrix(JMatrix { n, storage: Storage::Dense(out), context: j.context.clone() }))
        }
        Storage::Lazy(f) => {
            if n > MAX_ENUMERATION {
                return Err(Error::size("permutation degree", n, MAX_ENUMERATION));
            }
            for p in enumerate(n)? {
                if !(f(&p, &p).re > T::zero()) {
                    return Err(degenerate(p));
                }
            }
            let f = f.clone();
            Ok(ReducedJMatrix(JMatrix::from_evaluator(n, j.context.clone(), move |s1, s2| {
                if s1 == s2 {
                    return Complex::one();
                }
                f(s1, s2).unscale((f(s1, s1).re * f(s2, s2).re).sqrt())
            })))
        }
    }
}

/// `Tr{(Ĵ/N!)²}` and the normalized purity `𝒫 = (N!/(N!−1))(Tr{(Ĵ/N!)²} − 1/N!)`.
/// `purity` is `None` for `N = 1`, where the normalization degenerates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurityReport<T> {
    pub n: usize,
    pub trace_sq: T,
    pub purity: Option<T>,
}

pub(crate) fn normalized_purity<T: Real>(n: usize, trace_sq: T) -> PurityReport<T> {
    let nf = T::lit(factorial(n));
    let purity = if n <= 1 { None } else { Some(nf / (nf - T::one()) * (trace_sq - nf.recip())) };
    PurityReport { n, trace_sq, purity }
}

pub fn purity<T: Real>(j: &JMatrix<T>) -> Result<PurityReport<T>> {
    purity_reduced(&reduce(j)?)
}

pub fn purity_reduced<T: Real>(jr: &ReducedJMatrix<T>) -> Result<PurityReport<T>> {
    let j = &jr.0;
    let n = j.n;
    let trace_sq = match &j.storage {
        Storage::Cycle(map) => {
            if n > CYCLE_PURITY_MAX {
                return Err(Error::size("cycle-compressed photon number", n, CYCLE_PURITY_MAX));
            }
            map.iter().map(|(ct, v)| v.norm_sqr() / T::lit(ct.centralizer_order())).sum()
        }
        _ => {
            let m = j.to_matrix()?;
            let nf = T::lit(factorial(n));
            m.as_slice().iter().map(|z| z.norm_sqr()).sum::<T>() / (nf * nf)
        }
    };
    Ok(normalized_purity(n, trace_sq))
}

/// Two-photon visibility `𝒱 = J(T,I)/√(J(I,I)J(T,T))` with
/// `J(I,I) = Tr{Γ₁ρ₁}Tr{Γ₂ρ₂}`, `J(T,T) = Tr{Γ₂ρ₁}Tr{Γ₁ρ₂}`, `J(T,I) = Tr{Γ₁ρ₁Γ₂ρ₂}`.
pub fn mandel_visibility<T: Real>(
    rho1: &MixedState<T>,
    rho2: &MixedState<T>,
    det1: &DetectorModel<T>,
    det2: &DetectorModel<T>,
) -> Result<Complex<T>> {
    let tr = |rho: &MixedState<T>, det: &DetectorModel<T>| -> Result<T> {
        rho.components().iter().map(|(p, s)| Ok(overlap(s, det, s)?.re * *p)).sum()
    };
    let j_ii = tr(rho1, det1)? * tr(rho2, det2)?;
    let j_tt = tr(rho1, det2)? * tr(rho2, det1)?;
    if !(j_ii > T::zero()) {
        return Err(Error::DegenerateDetection { permutation: vec![0, 1] });
    }
    if !(j_tt > T::zero()) {
        return Err(Error::DegenerateDetection { permutation: vec![1, 0] });
    }
    let mut j_ti = Complex::zero();
    for (p, a) in rho1.components() {
        for (q, b) in rho2.components() {
            j_ti = j_ti + (overlap(b, det1, a)? * overlap(a, det2, b)?).scale(p * q);
        }
    }
    Ok(j_ti.unscale((j_ii * j_tt).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GaussianState;

    fn gauss(t: f64) -> PureState<f64> {
        PureState::Gaussian(GaussianState::new(2.0, 1.0, t, 0).unwrap())
    }

    #[test]
    fn identical_states_give_all_ones() {
        let states = vec![gauss(0.0); 3];
        let j = build_pure(&states, &vec![DetectorModel::Ideal; 3], OutputContext::Any).unwrap();
        for i in 0..6 {
            for k in 0..6 {
                assert!((j.entry_at(i, k) - Complex::one()).norm() < 1e-14);
            }
        }
        assert!((j.trace().unwrap().re - 6.0).abs() < 1e-13);
    }

    #[test]
    fn delayed_pair_off_diagonal() {
        let tau = 0.9;
        let j = build_pure(&[gauss(0.0), gauss(tau)], &vec![DetectorModel::Ideal; 2], OutputContext::Any).unwrap();
        assert!((j.entry_at(0, 1).norm() - (-tau * tau).exp()).abs() < 1e-15);
        let v = mandel_visibility(
            &MixedState::Pure(gauss(0.0)),
            &MixedState::Pure(gauss(tau)),
            &DetectorModel::Ideal,
            &DetectorModel::Ideal,
        )
        .unwrap();
        assert!((v.norm() - (-tau * tau).exp()).abs() < 1e-15);
    }

    #[test]
    fn cycle_compressed_n2() {
        let base = GaussianState::new(0.0f64, 1.0, 0.0, 0).unwrap();
        let rho = MixedState::arrival_jitter(base, 0.4, 32).unwrap();
        let j = build_cycle_compressed(&rho, &DetectorModel::Ideal, 2).unwrap();
        let g2 = crate::spectral::gk_trace(&rho, &DetectorModel::Ideal, 2).unwrap();
        assert!((j.entry_at(0, 1).re - g2).abs() < 1e-14);
        assert!((j.entry_at(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extremes_with_ideal_detectors() {
        let input = OccupationVector::new(vec![2, 1]);
        let dets = vec![DetectorModel::Ideal; 3];
        let ind = build_extreme(Extreme::Indistinguishable, &input, &[gauss(0.0)], &dets, OutputContext::Any).unwrap();
        let eig = crate::linalg::hermitian_eigen(&ind.to_matrix().unwrap());
        assert!((eig.values[5] - 6.0).abs() < 1e-12 && eig.values[4].abs() < 1e-12);
        let other = PureState::Gaussian(GaussianState::new(2.0, 1.0, 0.0, 1).unwrap());
        let cl = build_extreme(Extreme::Classical, &input, &[gauss(0.0), other], &dets, OutputContext::Any).unwrap();
        let row_weight: f64 = (0..6).map(|k| cl.entry_at(0, k).re).sum();
        assert!((row_weight - 2.0).abs() < 1e-14);
        assert!(cl.subgroup_asymmetry(&input).unwrap() < 1e-12);
    }

    #[test]
    fn flat_detectors_scale_by_eta_power() {
        let input = OccupationVector::new(vec![1, 1, 1]);
        let dets = vec![DetectorModel::flat(0.8).unwrap(); 3];
        let ind = build_extreme(Extreme::Indistinguishable, &input, &[gauss(0.0)], &dets, OutputContext::Any).unwrap();
        assert!((ind.entry_at(2, 4).re - 0.512).abs() < 1e-14);
    }

    #[test]
    fn reduce_reports_degenerate_permutation() {
        let dets = vec![DetectorModel::flat(0.0).unwrap(); 2];
        let j = build_pure(&[gauss(0.0), gauss(0.0)], &dets, OutputContext::Any).unwrap();
        match reduce(&j) {
            Err(Error::DegenerateDetection { permutation }) => assert_eq!(permutation, vec![0, 1]),
            other => panic!("expected degenerate detection, got {other:?}"),
        }
    }

    #[test]
    fn purity_extremes() {
        let ones = JMatrix::from_cycle_function(4, |_| Complex::new(1.0f64, 0.0));
        assert!((purity(&ones).unwrap().purity.unwrap() - 1.0).abs() < 1e-12);
        let id = JMatrix::<f64>::from_cycle_function(4, |ct| {
            Complex::new(if *ct == CycleType::identity(4) { 1.0 } else { 0.0 }, 0.0)
        });
        assert!(purity(&id).unwrap().purity.unwrap().abs() < 1e-12);
        assert_eq!(purity(&JMatrix::<f64>::from_cycle_function(1, |_| Complex::one())).unwrap().purity, None);
    }
}
