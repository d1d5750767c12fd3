//! Output probabilities `P(m|n)` by several independent routes.
//!
//! * `JMatrix`: the quadratic form of `J` in the network path amplitudes.
//! * `PermanentBasis`: a finite sum of `|per(V(j))|²` over an orthonormal
//!   spectral basis, with the detector square roots folded into `V`.
//! * `General`: tensor-coefficient inputs (entangled spectra, ensembles).
//! * `Oracle`: Fock-space polynomial expansion of the creation operators,
//!   no permanents and no `J`.
//! * `Classical` / `Ideal`: the two extremes, in closed form.
//!
//! Multiplicity factors `μ(n)`, `μ(m)` are applied here and nowhere else.
//! With non-ideal detectors every engine reports the unnormalized
//! post-selected value.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jmatrix::{build_mixed, build_pure, JMatrix, OutputContext, ReducedJMatrix};
use crate::linalg::psd_sqrt;
use crate::matrix::{CMatrix, Matrix};
use crate::network::{check_pair, enumerate_outputs, NetworkMatrix, OccupationVector};
use crate::permanent::{permanent, permanent_ryser};
use crate::spectral::{orthonormalize, DetectorModel, MixedState, PureState};
use crate::symgroup::{enumerate, factorial, ModeSubgroup};
use crate::Real;

pub const MAX_JMATRIX_PHOTONS: usize = 8;
pub const MAX_ORACLE_PHOTONS: usize = 5;
/// Values in `[-NEGATIVE_TOLERANCE, 0)` are clamped; below that is an error.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;
/// Imaginary residuals above this (relative to `max(1, |P|)`) are logged.
pub const IMAG_TOLERANCE: f64 = 1e-10;
/// Cap on the number of pure-state combinations drawn from mixed photons.
pub const MAX_COMBINATIONS: usize = 100_000;
/// Cap on `r^N` for tensor-coefficient inputs.
pub const MAX_TENSOR_TERMS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    JMatrix,
    PermanentBasis,
    General,
    Classical,
    Ideal,
    Oracle,
}

impl Engine {
    pub const ALL: [Engine; 6] =
        [Engine::JMatrix, Engine::PermanentBasis, Engine::General, Engine::Classical, Engine::Ideal, Engine::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Engine::JMatrix => "jmatrix",
            Engine::PermanentBasis => "permanent",
            Engine::General => "general",
            Engine::Classical => "classical",
            Engine::Ideal => "ideal",
            Engine::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown engine {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityResult<T> {
    pub output: OccupationVector,
    pub p: T,
    pub engine: Engine,
    /// Imaginary part discarded from the complex-valued sum.
    pub imag_residual: T,
    /// True when a small negative value was clamped to zero.
    pub clamped: bool,
}

fn finalize<T: Real>(output: &OccupationVector, engine: Engine, value: Complex<T>) -> Result<ProbabilityResult<T>> {
    let mut p = value.re;
    if !p.is_finite() {
        return Err(Error::Domain(format!("{engine} engine produced a non-finite probability for {output}")));
    }
    let imag_residual = value.im.abs();
    if imag_residual > T::lit(IMAG_TOLERANCE) * p.abs().max(T::one()) {
        log::warn!("{engine} engine: imaginary residual {imag_residual} for {output}");
    }
    let mut clamped = false;
    if p < T::zero() {
        if p < -T::lit(NEGATIVE_TOLERANCE) {
            return Err(Error::NegativeProbability { value: p.as_f64() });
        }
        log::debug!("{engine} engine: clamped {p} to 0 for {output}");
        p = T::zero();
        clamped = true;
    }
    Ok(ProbabilityResult { output: output.clone(), p, engine, imag_residual, clamped })
}

fn vacuum<T: Real>(output: &OccupationVector, engine: Engine) -> ProbabilityResult<T> {
    ProbabilityResult { output: output.clone(), p: T::one(), engine, imag_residual: T::zero(), clamped: false }
}

fn mu<T: Real>(v: &OccupationVector) -> T {
    T::lit(v.multiplicity() as f64)
}

/// Detectors of the output slots of `m`, and the matching J context.
pub fn slot_detectors<T: Real>(detectors: &[DetectorModel<T>], m: &OccupationVector) -> (Vec<DetectorModel<T>>, OutputContext) {
    let l = m.mode_list();
    let slots = l.iter().map(|&x| detectors[x].clone()).collect();
    let uniform = detectors.windows(2).all(|w| w[0] == w[1]);
    (slots, if uniform { OutputContext::Any } else { OutputContext::Slots(l) })
}

/// A complete problem instance: network, input occupation, one state per
/// photon (in input-slot order, i.e. ascending input mode) and one detector
/// per output mode.
#[derive(Clone, Debug)]
pub struct Experiment<T> {
    network: NetworkMatrix<T>,
    input: OccupationVector,
    photons: Vec<MixedState<T>>,
    detectors: Vec<DetectorModel<T>>,
}

impl<T: Real> Experiment<T> {
    /// A single detector is broadcast to every output mode. Photons sharing
    /// an input mode must be the same pure state.
    pub fn new(
        network: NetworkMatrix<T>,
        input: OccupationVector,
        photons: Vec<MixedState<T>>,
        mut detectors: Vec<DetectorModel<T>>,
    ) -> Result<Self> {
        let m = network.modes();
        if input.modes() != m {
            return Err(Error::arg(format!("input has {} modes, network has {m}", input.modes())));
        }
        if photons.len() != input.total() {
            return Err(Error::arg(format!("input has {} photons but {} photon states were given", input.total(), photons.len())));
        }
        if detectors.len() == 1 && m > 1 {
            detectors = vec![detectors[0].clone(); m];
        }
        if detectors.len() != m {
            return Err(Error::arg(format!("{} detectors for {m} output modes", detectors.len())));
        }
        let k = input.mode_list();
        for a in 1..k.len() {
            if k[a] == k[a - 1] {
                let same_pure = matches!(photons[a], MixedState::Pure(_)) && photons[a] == photons[a - 1];
                if !same_pure {
                    return Err(Error::Unsupported(format!(
                        "photons sharing input mode {} must be identical pure states",
                        k[a]
                    )));
                }
            }
        }
        Ok(Experiment { network, input, photons, detectors })
    }

    pub fn network(&self) -> &NetworkMatrix<T> {
        &self.network
    }

    pub fn input(&self) -> &OccupationVector {
        &self.input
    }

    pub fn photons(&self) -> &[MixedState<T>] {
        &self.photons
    }

    pub fn detectors(&self) -> &[DetectorModel<T>] {
        &self.detectors
    }

    pub fn is_pure(&self) -> bool {
        self.photons.iter().all(|p| matches!(p, MixedState::Pure(_)))
    }

    pub fn uniform_detectors(&self) -> bool {
        self.detectors.windows(2).all(|w| w[0] == w[1])
    }

    pub fn all_ideal(&self) -> bool {
        self.detectors.iter().all(|d| d.is_ideal())
    }

    /// `J` for output `m` (any output when the detectors are uniform).
    pub fn jmatrix(&self, m: &OccupationVector) -> Result<JMatrix<T>> {
        let n = self.input.total();
        if n > MAX_JMATRIX_PHOTONS {
            return Err(Error::size("J-matrix engine photon number", n, MAX_JMATRIX_PHOTONS));
        }
        let (slots, context) = slot_detectors(&self.detectors, m);
        if self.is_pure() {
            let states: Vec<PureState<T>> = self
                .photons
                .iter()
                .map(|p| match p {
                    MixedState::Pure(s) => s.clone(),
                    MixedState::Ensemble(_) => unreachable!(),
                })
                .collect();
            build_pure(&states, &slots, context)
        } else {
            build_mixed(&self.photons, &slots, context)
        }
    }

    pub fn probability(&self, engine: Engine, m: &OccupationVector) -> Result<ProbabilityResult<T>> {
        let (u, n) = (&self.network, &self.input);
        match engine {
            Engine::JMatrix => {
                if n.total() == 0 {
                    check_pair(u.modes(), n, m)?;
                    return Ok(vacuum(m, engine));
                }
                prob_jmatrix(&self.jmatrix(m)?, u, n, m)
            }
            Engine::PermanentBasis => prob_permanent_basis(&self.photons, &self.detectors, u, n, m),
            Engine::General => prob_general(&GeneralInput::product(&self.photons)?, &self.detectors, u, n, m),
            Engine::Classical => prob_classical(u, n, m),
            Engine::Ideal => prob_ideal_indistinguishable(u, n, m),
            Engine::Oracle => prob_oracle(&self.photons, &self.detectors, u, n, m),
        }
    }

    /// The `J` shared by all outputs when every mode has the same detector.
    pub fn shared_jmatrix(&self) -> Result<Option<JMatrix<T>>> {
        let n = self.input.total();
        if n == 0 || !self.uniform_detectors() {
            return Ok(None);
        }
        let mut counts = vec![0; self.network.modes()];
        counts[0] = n;
        self.jmatrix(&OccupationVector::new(counts)).map(Some)
    }

    /// Like [`Experiment::probability`], reusing a [`Experiment::shared_jmatrix`]
    /// for the J-matrix engine when one is given.
    pub fn probability_with(&self, engine: Engine, shared: Option<&JMatrix<T>>, m: &OccupationVector) -> Result<ProbabilityResult<T>> {
        match shared {
            Some(j) if engine == Engine::JMatrix => prob_jmatrix(j, &self.network, &self.input, m),
            _ => self.probability(engine, m),
        }
    }

    /// Probabilities of every output, in enumeration order; outputs are
    /// evaluated in parallel and summed sequentially.
    pub fn distribution(&self, engine: Engine) -> Result<Distribution<T>> {
        let outputs = enumerate_outputs(self.network.modes(), self.input.total())?;
        let shared = if engine == Engine::JMatrix { self.shared_jmatrix()? } else { None };
        let results: Vec<ProbabilityResult<T>> =
            outputs.par_iter().map(|m| self.probability_with(engine, shared.as_ref(), m)).collect::<Result<_>>()?;
        let sum = results.iter().map(|r| r.p).sum();
        Ok(Distribution { input: self.input.clone(), engine, outputs: results, sum })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    pub input: OccupationVector,
    pub engine: Engine,
    pub outputs: Vec<ProbabilityResult<T>>,
    pub sum: T,
}

/// `Σ_m P(m|n)`; 1 for ideal detectors.
pub fn normalization_report<T: Real>(experiment: &Experiment<T>, engine: Engine) -> Result<T> {
    Ok(experiment.distribution(engine)?.sum)
}

fn path_products<T: Real>(u: &NetworkMatrix<T>, n: &OccupationVector, m: &OccupationVector) -> Result<Vec<Complex<T>>> {
    let k = n.mode_list();
    let l = m.mode_list();
    Ok(enumerate(k.len())?
        .iter()
        .map(|s| (0..k.len()).fold(Complex::one(), |acc, alpha| acc * u.get(k[s.apply(alpha)], l[alpha])))
        .collect())
}

/// `X†JX` with a fixed row partition and sequential final sum.
fn quadratic_form<T: Real>(x: &[Complex<T>], entry: impl Fn(usize, usize) -> Complex<T> + Sync) -> Complex<T> {
    let rows: Vec<Complex<T>> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            if x[i].is_zero() {
                return Complex::zero();
            }
            let row = (0..x.len()).fold(Complex::zero(), |acc, j| acc + entry(i, j) * x[j]);
            x[i].conj() * row
        })
        .collect();
    rows.into_iter().fold(Complex::zero(), |acc, v| acc + v)
}

/// `P = (1/(μ(m)μ(n))) Σ_{σ₁σ₂} J(σ₁,σ₂) ∏_α U*_{k_{σ₁(α)} l_α} U_{k_{σ₂(α)} l_α}`.
pub fn prob_jmatrix<T: Real>(
    j: &JMatrix<T>,
    u: &NetworkMatrix<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<ProbabilityResult<T>> {
    check_pair(u.modes(), n, m)?;
    let photons = n.total();
    if j.photons() != photons {
        return Err(Error::arg(format!("J has {} photons, input has {photons}", j.photons())));
    }
    if photons > MAX_JMATRIX_PHOTONS {
        return Err(Error::size("J-matrix engine photon number", photons, MAX_JMATRIX_PHOTONS));
    }
    if !j.context().admits(&m.mode_list()) {
        return Err(Error::arg(format!("J was built for output slots {:?}, not {m}", j.context())));
    }
    if photons == 0 {
        return Ok(vacuum(m, Engine::JMatrix));
    }
    let x = path_products(u, n, m)?;
    let value = match j.dense_entries() {
        Some(e) => quadratic_form(&x, |a, b| e[a * x.len() + b]),
        None => quadratic_form(&x, |a, b| j.entry_at(a, b)),
    };
    finalize(m, Engine::JMatrix, value.unscale(mu::<T>(m) * mu::<T>(n)))
}

/// `X_σ = √J(σ,σ) ∏_α U_{k_{σ(α)} l_α}`, canonical permutation order.
#[derive(Clone, Debug, PartialEq)]
pub struct PathAmplitudeVector<T> {
    pub values: Vec<Complex<T>>,
}

pub fn path_amplitudes<T: Real>(
    j: &JMatrix<T>,
    u: &NetworkMatrix<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<PathAmplitudeVector<T>> {
    check_pair(u.modes(), n, m)?;
    let x = path_products(u, n, m)?;
    Ok(PathAmplitudeVector { values: x.iter().enumerate().map(|(i, v)| v.scale(j.entry_at(i, i).re.sqrt())).collect() })
}

/// `P = X†ĴX / (μ(m)μ(n))`.
pub fn prob_reduced<T: Real>(
    jr: &ReducedJMatrix<T>,
    x: &PathAmplitudeVector<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<ProbabilityResult<T>> {
    if x.values.len() != factorial(jr.photons()) as usize {
        return Err(Error::arg("path amplitude vector does not match J"));
    }
    let value = quadratic_form(&x.values, |a, b| jr.entry_at(a, b));
    finalize(m, Engine::JMatrix, value.unscale(mu::<T>(m) * mu::<T>(n)))
}

/// `P = per(|U[n|m]|²) / μ(m)`: independent photons hopping through the network.
pub fn prob_classical<T: Real>(u: &NetworkMatrix<T>, n: &OccupationVector, m: &OccupationVector) -> Result<ProbabilityResult<T>> {
    let sub = u.submatrix(n, m)?;
    let sq: Matrix<T> = sub.map(|z| z.norm_sqr());
    let per = permanent_ryser(&sq)?;
    finalize(m, Engine::Classical, Complex::new(per / mu::<T>(m), T::zero()))
}

/// `|per(U[n|m])|² / (μ(m)μ(n))`.
pub fn prob_ideal_indistinguishable<T: Real>(
    u: &NetworkMatrix<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<ProbabilityResult<T>> {
    let per = permanent(&u.submatrix(n, m)?)?;
    finalize(m, Engine::Ideal, Complex::new(per.norm_sqr() / (mu::<T>(m) * mu::<T>(n)), T::zero()))
}

/// Every choice of one pure component per photon, with its product weight.
fn pure_combinations<T: Real>(photons: &[MixedState<T>]) -> Result<Vec<(T, Vec<PureState<T>>)>> {
    let count = photons.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len()));
    match count {
        Some(c) if c <= MAX_COMBINATIONS => {}
        _ => return Err(Error::size("pure-state combinations", count.unwrap_or(usize::MAX), MAX_COMBINATIONS)),
    }
    let mut out = vec![(T::one(), Vec::with_capacity(photons.len()))];
    for p in photons {
        let comps = p.components();
        let mut next = Vec::with_capacity(out.len() * comps.len());
        for (w, states) in &out {
            for (q, s) in &comps {
                let mut st = states.clone();
                st.push((*s).clone());
                next.push((*w * *q, st));
            }
        }
        out = next;
    }
    Ok(out)
}

/// Block sizes of the output slots: the nonzero counts of `m`, in mode order.
fn output_blocks(m: &OccupationVector) -> Vec<(usize, usize)> {
    m.counts().iter().enumerate().filter(|(_, &c)| c > 0).map(|(l, &c)| (l, c)).collect()
}

/// Label assignments that are nondecreasing within each block, with weight
/// `∏_b size_b! / ∏ (label counts)!` (the number of orderings each represents).
fn block_multisets(blocks: &[usize], r: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(blocks: &[usize], r: usize, b: usize, pos: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if b == blocks.len() {
            let mut w = 1.0;
            let mut start = 0;
            for &size in blocks {
                let slice = &cur[start..start + size];
                w *= factorial(size);
                let mut i = 0;
                while i < size {
                    let run = slice[i..].iter().take_while(|&&x| x == slice[i]).count();
                    w /= factorial(run);
                    i += run;
                }
                start += size;
            }
            out.push((cur.clone(), w));
            return;
        }
        if pos == blocks[b] {
            rec(blocks, r, b + 1, 0, 0, cur, out);
            return;
        }
        for j in min..r {
            cur.push(j);
            rec(blocks, r, b, pos + 1, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(blocks, r, 0, 0, 0, &mut Vec::with_capacity(blocks.iter().sum()), &mut out);
    out
}

/// Number of multiset terms: `∏_l C(m_l + r − 1, m_l)`.
pub fn multiset_count(m: &OccupationVector, r: usize) -> f64 {
    output_blocks(m).iter().map(|&(_, c)| crate::network::binomial(c + r - 1, c)).product()
}

/// Permanent-basis engine for at most one photon per input mode:
/// `P = (1/μ(m)) Σ_j w(j) |per(V(j))|²` with
/// `V_{aα} = U_{k_a l_α} (√K_{l_α} c_a)_{j_α}`, where `c_a` are the photon
/// coordinates in an orthonormal basis of their span and `K_l` is the
/// detector operator of mode `l` restricted to that span. Mixed photons are
/// averaged over component combinations.
pub fn prob_permanent_basis<T: Real>(
    photons: &[MixedState<T>],
    detectors: &[DetectorModel<T>],
    u: &NetworkMatrix<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<ProbabilityResult<T>> {
    check_pair(u.modes(), n, m)?;
    check_inputs(photons, detectors, u, n)?;
    if !n.is_single_occupancy() {
        return Err(Error::Unsupported(
            "permanent-basis engine needs at most one photon per input mode; use the jmatrix or general engine".into(),
        ));
    }
    if n.total() == 0 {
        return Ok(vacuum(m, Engine::PermanentBasis));
    }
    let k = n.mode_list();
    let l = m.mode_list();
    let blocks = output_blocks(m);
    let sizes: Vec<usize> = blocks.iter().map(|b| b.1).collect();
    let block_of: Vec<usize> = blocks.iter().enumerate().flat_map(|(i, &(_, c))| std::iter::repeat_n(i, c)).collect();
    let combos = pure_combinations(photons)?;
    let values: Vec<T> = combos
        .par_iter()
        .map(|(w, states)| -> Result<T> {
            let on = orthonormalize(states, &DetectorModel::Ideal)?;
            let r = on.rank;
            // s[b][a] = √K_b c_a
            let s: Vec<Vec<Vec<Complex<T>>>> = blocks
                .iter()
                .map(|&(mode, _)| -> Result<_> {
                    let root = psd_sqrt(&on.restrict(states, &detectors[mode])?);
                    Ok(on.coeffs.iter().map(|c| root.matvec(c)).collect())
                })
                .collect::<Result<_>>()?;
            let mut total = T::zero();
            for (js, weight) in block_multisets(&sizes, r) {
                let v = CMatrix::from_fn(k.len(), |a, alpha| u.get(k[a], l[alpha]) * s[block_of[alpha]][a][js[alpha]]);
                total = total + T::lit(weight) * permanent(&v)?.norm_sqr();
            }
            Ok(*w * total)
        })
        .collect::<Result<_>>()?;
    let total: T = values.into_iter().sum();
    finalize(m, Engine::PermanentBasis, Complex::new(total / mu::<T>(m), T::zero()))
}

fn check_inputs<T>(photons: &[MixedState<T>], detectors: &[DetectorModel<T>], u: &NetworkMatrix<T>, n: &OccupationVector) -> Result<()>
where
    T: Real,
{
    if photons.len() != n.total() {
        return Err(Error::arg(format!("input has {} photons but {} photon states were given", n.total(), photons.len())));
    }
    if detectors.len() != u.modes() {
        return Err(Error::arg(format!("{} detectors for {} output modes", detectors.len(), u.modes())));
    }
    Ok(())
}

/// One ensemble member of a tensor-coefficient input:
/// `|Ψ⟩ ∝ Σ_j C_j ∏_a a†_{k_a}(φ_{j_a})|0⟩` over a spanning set of states.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralComponent<T> {
    pub weight: T,
    pub states: Vec<PureState<T>>,
    /// `s^N` coefficients, index `Σ_a j_a s^{N−1−a}` (photon slot 0 most significant).
    pub coeffs: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralInput<T> {
    photons: usize,
    components: Vec<GeneralComponent<T>>,
}

impl<T: Real> GeneralInput<T> {
    pub fn new(photons: usize, components: Vec<GeneralComponent<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::arg("general input needs at least one component"));
        }
        for c in &components {
            if !(c.weight >= T::zero()) {
                return Err(Error::arg("component weights must be nonnegative"));
            }
            let s = c.states.len();
            let expected = s.checked_pow(photons as u32).filter(|&x| x <= MAX_TENSOR_TERMS);
            match expected {
                None => return Err(Error::size("tensor coefficient count", usize::MAX, MAX_TENSOR_TERMS)),
                Some(e) if e != c.coeffs.len() => {
                    return Err(Error::arg(format!("{} coefficients for {s} states and {photons} photons", c.coeffs.len())))
                }
                _ => {}
            }
        }
        Ok(GeneralInput { photons, components })
    }

    /// Product input: one component per combination of pure photon states.
    pub fn product(photons: &[MixedState<T>]) -> Result<Self> {
        let n = photons.len();
        let components = pure_combinations(photons)?
            .into_iter()
            .map(|(weight, states)| {
                // Equal states share one index so the tensor stays subgroup-symmetric.
                let mut distinct: Vec<PureState<T>> = Vec::new();
                let mut slot_index = Vec::with_capacity(n);
                for st in states {
                    let pos = distinct.iter().position(|d| *d == st).unwrap_or_else(|| {
                        distinct.push(st);
                        distinct.len() - 1
                    });
                    slot_index.push(pos);
                }
                let s = distinct.len();
                let mut coeffs = vec![Complex::zero(); s.pow(n as u32)];
                coeffs[undigits(&slot_index, s)] = Complex::one();
                GeneralComponent { weight, states: distinct, coeffs }
            })
            .collect();
        Self::new(n, components)
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn components(&self) -> &[GeneralComponent<T>] {
        &self.components
    }
}

fn digits(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in (0..len).rev() {
        d[slot] = index % base;
        index /= base;
    }
    d
}

fn undigits(d: &[usize], base: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * base + x)
}

/// Max deviation of `C` from symmetry under the input-mode subgroup.
fn subgroup_asymmetry<T: Real>(coeffs: &[Complex<T>], s: usize, n: &OccupationVector) -> Result<T> {
    let members = ModeSubgroup::new(n.counts().to_vec()).members()?;
    let len = n.total();
    let mut worst = T::zero();
    for (idx, c) in coeffs.iter().enumerate() {
        let d = digits(idx, s, len);
        for p in &members {
            let moved: Vec<usize> = (0..len).map(|a| d[p.apply(a)]).collect();
            worst = worst.max((coeffs[undigits(&moved, s)] - *c).norm());
        }
    }
    Ok(worst)
}

/// General engine: `P = (1/(μ(m)μ(n))) Σ_i p_i Σ_j |Σ_{j'} C'_{j'} per(B(j,j'))|²` with
/// `B_{βα} = U_{k_β l_α} ⟨e_{j_α}|√K_{l_α}|e_{j'_β}⟩` in an orthonormal basis `e` of
/// each component's span (`C'` is `C` re-expressed in that basis).
pub fn prob_general<T: Real>(
    input: &GeneralInput<T>,
    detectors: &[DetectorModel<T>],
    u: &NetworkMatrix<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<ProbabilityResult<T>> {
    check_pair(u.modes(), n, m)?;
    let photons = n.total();
    if input.photons != photons {
        return Err(Error::arg(format!("general input has {} photons, occupation has {photons}", input.photons)));
    }
    if detectors.len() != u.modes() {
        return Err(Error::arg(format!("{} detectors for {} output modes", detectors.len(), u.modes())));
    }
    if photons == 0 {
        return Ok(vacuum(m, Engine::General));
    }
    let k = n.mode_list();
    let l = m.mode_list();
    let blocks = output_blocks(m);
    let sizes: Vec<usize> = blocks.iter().map(|b| b.1).collect();
    let block_of: Vec<usize> = blocks.iter().enumerate().flat_map(|(i, &(_, c))| std::iter::repeat_n(i, c)).collect();

    for comp in &input.components {
        let scale = comp.coeffs.iter().fold(T::zero(), |a, c| a.max(c.norm())).max(T::min_positive_value());
        let asym = subgroup_asymmetry(&comp.coeffs, comp.states.len(), n)?;
        if asym > T::lit(1e-10) * scale {
            return Err(Error::arg(format!(
                "tensor coefficients are not symmetric under the input-mode subgroup (deviation {asym})"
            )));
        }
    }

    let values: Vec<T> = input
        .components
        .par_iter()
        .map(|comp| -> Result<T> {
            let s = comp.states.len();
            let on = orthonormalize(&comp.states, &DetectorModel::Ideal)?;
            let r = on.rank;
            // C' over the orthonormal basis: apply the coordinate map on every slot.
            let mut tensor = comp.coeffs.clone();
            let mut cur_base = vec![s; photons];
            for slot in 0..photons {
                let mut next_base = cur_base.clone();
                next_base[slot] = r;
                let size: usize = next_base.iter().product();
                let mut next = vec![Complex::zero(); size];
                for (idx, c) in tensor.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let d = mixed_digits(idx, &cur_base);
                    for i in 0..r {
                        let mut dd = d.clone();
                        dd[slot] = i;
                        next[mixed_undigits(&dd, &next_base)] = next[mixed_undigits(&dd, &next_base)] + *c * on.coeffs[d[slot]][i];
                    }
                }
                tensor = next;
                cur_base = next_base;
            }
            let roots: Vec<CMatrix<T>> = blocks
                .iter()
                .map(|&(mode, _)| Ok(psd_sqrt(&on.restrict(&comp.states, &detectors[mode])?)))
                .collect::<Result<_>>()?;
            let nonzero: Vec<(Vec<usize>, Complex<T>)> = tensor
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(idx, c)| (digits(idx, r, photons), *c))
                .collect();
            let mut total = T::zero();
            for (js, weight) in block_multisets(&sizes, r) {
                let mut amp = Complex::zero();
                for (jp, c) in &nonzero {
                    let b = CMatrix::from_fn(photons, |beta, alpha| {
                        u.get(k[beta], l[alpha]) * roots[block_of[alpha]][(js[alpha], jp[beta])]
                    });
                    amp = amp + *c * permanent(&b)?;
                }
                total = total + T::lit(weight) * amp.norm_sqr();
            }
            Ok(comp.weight * total)
        })
        .collect::<Result<_>>()?;
    let total: T = values.into_iter().sum();
    finalize(m, Engine::General, Complex::new(total / (mu::<T>(m) * mu::<T>(n)), T::zero()))
}

fn mixed_digits(mut index: usize, bases: &[usize]) -> Vec<usize> {
    let mut d = vec![0; bases.len()];
    for slot in (0..bases.len()).rev() {
        d[slot] = index % bases[slot];
        index /= bases[slot];
    }
    d
}

fn mixed_undigits(d: &[usize], bases: &[usize]) -> usize {
    d.iter().zip(bases).fold(0, |acc, (&x, &b)| acc * b + x)
}

/// Fock-space oracle. Expands `∏_a a†_{k_a}(φ_a)` with
/// `a†_{k,i} = Σ_l U_{kl} b†_{l,i}` into monomials over output variables `(l,i)`,
/// reads off `A(j) = ⟨0|∏_α b_{l_α,j_α}|ψ⟩`, and contracts
/// `P = (1/μ(m)) Σ_{j,j'} ∏_α K_{l_α}[j_α,j'_α] A(j)* A(j')`.
pub fn prob_oracle<T: Real>(
    photons: &[MixedState<T>],
    detectors: &[DetectorModel<T>],
    u: &NetworkMatrix<T>,
    n: &OccupationVector,
    m: &OccupationVector,
) -> Result<ProbabilityResult<T>> {
    check_pair(u.modes(), n, m)?;
    check_inputs(photons, detectors, u, n)?;
    let count = n.total();
    if count > MAX_ORACLE_PHOTONS {
        return Err(Error::size("oracle photon number", count, MAX_ORACLE_PHOTONS));
    }
    if count == 0 {
        return Ok(vacuum(m, Engine::Oracle));
    }
    let k = n.mode_list();
    let l = m.mode_list();
    let combos = pure_combinations(photons)?;
    let mut total = T::zero();
    for (w, states) in &combos {
        let on = orthonormalize(states, &DetectorModel::Ideal)?;
        let r = on.rank;
        if r > count {
            return Err(Error::size("oracle basis rank", r, count));
        }
        let mut poly: HashMap<Vec<(usize, usize)>, Complex<T>> = HashMap::new();
        poly.insert(Vec::new(), Complex::one());
        for (a, &ka) in k.iter().enumerate() {
            let mut next: HashMap<Vec<(usize, usize)>, Complex<T>> = HashMap::new();
            for (mono, coef) in &poly {
                for (mode, &cap) in m.counts().iter().enumerate() {
                    let used = mono.iter().filter(|v| v.0 == mode).count();
                    if used >= cap {
                        continue;
                    }
                    for i in 0..r {
                        let factor = u.get(ka, mode) * on.coeffs[a][i];
                        if factor.is_zero() {
                            continue;
                        }
                        let mut key = mono.clone();
                        let pos = key.partition_point(|v| *v < (mode, i));
                        key.insert(pos, (mode, i));
                        let e = next.entry(key).or_insert_with(Complex::zero);
                        *e = *e + *coef * factor;
                    }
                }
            }
            poly = next;
        }
        let norm = T::lit(n.multiplicity() as f64).sqrt();
        // Amplitudes over ordered label tuples j (slot α carries mode l_α).
        let mut amps: Vec<(Vec<usize>, Complex<T>)> = Vec::new();
        for idx in 0..r.pow(count as u32) {
            let js = digits(idx, r, count);
            let mut key: Vec<(usize, usize)> = l.iter().zip(&js).map(|(&a, &b)| (a, b)).collect();
            key.sort_unstable();
            let Some(coef) = poly.get(&key) else { continue };
            let mut overlap = 1.0;
            let mut i = 0;
            while i < key.len() {
                let run = key[i..].iter().take_while(|&&v| v == key[i]).count();
                overlap *= factorial(run);
                i += run;
            }
            amps.push((js, coef.scale(T::lit(overlap)).unscale(norm)));
        }
        let kernels: HashMap<usize, CMatrix<T>> = output_blocks(m)
            .iter()
            .map(|&(mode, _)| Ok((mode, on.restrict(states, &detectors[mode])?)))
            .collect::<Result<_>>()?;
        let mut value = Complex::zero();
        for (j1, a1) in &amps {
            for (j2, a2) in &amps {
                let kprod = (0..count).fold(Complex::<T>::one(), |acc, alpha| acc * kernels[&l[alpha]][(j1[alpha], j2[alpha])]);
                value = value + kprod * a1.conj() * *a2;
            }
        }
        total = total + *w * value.re;
    }
    finalize(m, Engine::Oracle, Complex::new(total / mu::<T>(m), T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GaussianState;

    fn gauss(t: f64) -> MixedState<f64> {
        MixedState::Pure(PureState::Gaussian(GaussianState::new(0.0, 1.0, t, 0).unwrap()))
    }

    fn hom(tau: f64) -> Experiment<f64> {
        Experiment::new(
            NetworkMatrix::fourier(2).unwrap(),
            OccupationVector::new(vec![1, 1]),
            vec![gauss(0.0), gauss(tau)],
            vec![DetectorModel::Ideal],
        )
        .unwrap()
    }

    #[test]
    fn hom_dip_all_engines() {
        let coinc = OccupationVector::new(vec![1, 1]);
        for tau in [0.0, 0.7, 2.0] {
            let e = hom(tau);
            let expected = (1.0 - (-tau * tau).exp()) / 2.0;
            for engine in [Engine::JMatrix, Engine::PermanentBasis, Engine::General, Engine::Oracle] {
                let p = e.probability(engine, &coinc).unwrap().p;
                assert!((p - expected).abs() < 1e-12, "{engine} tau={tau}: {p} vs {expected}");
            }
        }
    }

    #[test]
    fn classical_beam_splitter() {
        let u = NetworkMatrix::<f64>::fourier(2).unwrap();
        let n = OccupationVector::new(vec![1, 1]);
        let p20 = prob_classical(&u, &n, &OccupationVector::new(vec![2, 0])).unwrap().p;
        let p11 = prob_classical(&u, &n, &OccupationVector::new(vec![1, 1])).unwrap().p;
        assert!((p20 - 0.25).abs() < 1e-15 && (p11 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fourier3_ideal() {
        let u = NetworkMatrix::<f64>::fourier(3).unwrap();
        let n = OccupationVector::new(vec![1, 1, 1]);
        let p = prob_ideal_indistinguishable(&u, &n, &n).unwrap().p;
        assert!((p - 1.0 / 3.0).abs() < 1e-14);
        assert!(prob_ideal_indistinguishable(&u, &n, &OccupationVector::new(vec![2, 1, 0])).unwrap().p < 1e-30);
    }

    #[test]
    fn multisets_weights_cover_all_tuples() {
        let ms = block_multisets(&[2, 1], 3);
        let total: f64 = ms.iter().map(|(_, w)| w).sum();
        assert_eq!(total, 27.0);
        assert_eq!(ms.len(), 6 * 3);
        assert_eq!(multiset_count(&OccupationVector::new(vec![2, 1]), 3), 18.0);
    }

    #[test]
    fn negative_values_clamp_or_fail() {
        let m = OccupationVector::new(vec![1]);
        let r = finalize(&m, Engine::JMatrix, Complex::new(-1e-12, 0.0)).unwrap();
        assert!(r.clamped && r.p == 0.0);
        assert!(finalize(&m, Engine::JMatrix, Complex::new(-1e-6, 0.0)).is_err());
    }

    #[test]
    fn multi_occupancy_rules() {
        let u = NetworkMatrix::<f64>::fourier(2).unwrap();
        let n = OccupationVector::new(vec![2, 0]);
        assert!(Experiment::new(u.clone(), n.clone(), vec![gauss(0.0), gauss(1.0)], vec![DetectorModel::Ideal]).is_err());
        let e = Experiment::new(u, n, vec![gauss(0.0), gauss(0.0)], vec![DetectorModel::Ideal]).unwrap();
        assert!(matches!(e.probability(Engine::PermanentBasis, &OccupationVector::new(vec![1, 1])), Err(Error::Unsupported(_))));
        for engine in [Engine::JMatrix, Engine::General, Engine::Oracle, Engine::Ideal] {
            let p = e.probability(engine, &OccupationVector::new(vec![1, 1])).unwrap().p;
            assert!((p - 0.5).abs() < 1e-13, "{engine}: {p}");
        }
        assert!((e.distribution(Engine::JMatrix).unwrap().sum - 1.0).abs() < 1e-13);
    }
}
