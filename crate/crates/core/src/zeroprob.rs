//! Zero output probabilities of partially distinguishable photons.
//!
//! Photons come in `Q` groups; group `q` holds `c_q` photons in the spectral
//! state `φ_q`. Summing the path amplitudes over in-group permutations leaves
//! one amplitude per group labeling `f` of the output slots,
//! `A_f = ∏_q per(U[group q | slots with f(α) = q])`, and
//! `P = (1/(μ(m)μ(n))) Σ_{f₁,f₂} J_R(f₁,f₂) A_{f₁}* A_{f₂}` with
//! `J_R(f₁,f₂) = ∏_α ⟨φ_{f₁(α)}|φ_{f₂(α)}⟩`. When every `A_f` vanishes the
//! probability is zero whatever the overlaps are; the scan below checks that
//! no other zeros occur.

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Matrix};
use crate::network::{check_pair, enumerate_outputs, NetworkMatrix, OccupationVector};
use crate::permanent::{permanent, structurally_zero, zero_threshold, ZERO_TOLERANCE};
use crate::probability::{prob_classical, Engine, Experiment, ProbabilityResult};
use crate::spectral::{gram_matrix, orthonormalize, DetectorModel, FiniteRankState, MixedState, PureState};
use crate::Real;

/// Overlap grid `s = ⟨φ_1|φ_q⟩` of the synthetic distinguishability settings.
pub const OVERLAP_GRID: [f64; 4] = [0.9, 0.5, 0.1, 0.0];
/// Probabilities below this count as zero.
pub const PROBABILITY_ZERO: f64 = 1e-12;
/// Cap on `N` for group-factorized evaluation.
pub const MAX_GROUP_PHOTONS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Group<T> {
    pub state: PureState<T>,
    /// Input modes of the group's photons (repeats mean multiple photons in a mode).
    pub modes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec<T> {
    modes: usize,
    groups: Vec<Group<T>>,
}

impl<T: Real> GroupSpec<T> {
    pub fn new(modes: usize, groups: Vec<Group<T>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::arg("need at least one photon group"));
        }
        let mut owner = vec![None; modes];
        for (q, g) in groups.iter().enumerate() {
            if g.modes.is_empty() {
                return Err(Error::arg(format!("group {q} has no photons")));
            }
            for &k in &g.modes {
                if k >= modes {
                    return Err(Error::arg(format!("group {q} uses mode {k}, network has {modes}")));
                }
                match owner[k] {
                    Some(o) if o != q => {
                        return Err(Error::arg(format!("input mode {k} is shared by groups {o} and {q}")))
                    }
                    _ => owner[k] = Some(q),
                }
            }
        }
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                if groups[a].state == groups[b].state {
                    return Err(Error::arg(format!("groups {a} and {b} have the same state")));
                }
            }
        }
        Ok(GroupSpec { modes, groups })
    }

    pub fn groups(&self) -> &[Group<T>] {
        &self.groups
    }

    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.modes.len()).collect()
    }

    pub fn photons(&self) -> usize {
        self.groups.iter().map(|g| g.modes.len()).sum()
    }

    pub fn input(&self) -> OccupationVector {
        let mut counts = vec![0; self.modes];
        for g in &self.groups {
            for &k in &g.modes {
                counts[k] += 1;
            }
        }
        OccupationVector::new(counts)
    }

    /// Group of each photon slot (slots in ascending input-mode order).
    pub fn slot_groups(&self) -> Vec<usize> {
        let mut tagged: Vec<(usize, usize)> =
            self.groups.iter().enumerate().flat_map(|(q, g)| g.modes.iter().map(move |&k| (k, q))).collect();
        tagged.sort_unstable();
        tagged.into_iter().map(|(_, q)| q).collect()
    }

    pub fn states(&self) -> Vec<PureState<T>> {
        self.groups.iter().map(|g| g.state.clone()).collect()
    }

    /// Rank of the group states' Gram matrix.
    pub fn rank(&self) -> Result<usize> {
        Ok(orthonormalize(&self.states(), &DetectorModel::Ideal)?.rank)
    }

    /// Same photon layout with different group states.
    pub fn with_states(&self, states: Vec<PureState<T>>) -> Result<Self> {
        if states.len() != self.groups.len() {
            return Err(Error::arg("one state per group required"));
        }
        let groups = self.groups.iter().zip(states).map(|(g, state)| Group { state, modes: g.modes.clone() }).collect();
        GroupSpec::new(self.modes, groups)
    }

    pub fn experiment(&self, u: &NetworkMatrix<T>) -> Result<Experiment<T>> {
        let photons = self.slot_groups().into_iter().map(|q| MixedState::Pure(self.groups[q].state.clone())).collect();
        Experiment::new(u.clone(), self.input(), photons, vec![DetectorModel::Ideal])
    }
}

/// Finite-rank states with `φ_1 = e_1` and `φ_q = s e_1 + √(1−s²) e_q`.
pub fn synthetic_states<T: Real>(q: usize, s: T) -> Result<Vec<PureState<T>>> {
    (0..q)
        .map(|i| {
            let mut c = vec![Complex::zero(); q];
            if i == 0 {
                c[0] = Complex::one();
            } else {
                c[0] = Complex::new(s, T::zero());
                c[i] = Complex::new((T::one() - s * s).sqrt(), T::zero());
            }
            Ok(PureState::FiniteRank(FiniteRankState::new(c)?))
        })
        .collect()
}

/// All maps from output slots to groups with `c_q` slots per group, in lexicographic order.
pub fn group_labelings(counts: &[usize]) -> Vec<Vec<usize>> {
    fn rec(left: &mut [usize], cur: &mut Vec<usize>, total: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == total {
            out.push(cur.clone());
            return;
        }
        for q in 0..left.len() {
            if left[q] > 0 {
                left[q] -= 1;
                cur.push(q);
                rec(left, cur, total, out);
                cur.pop();
                left[q] += 1;
            }
        }
    }
    let total = counts.iter().sum();
    let mut out = Vec::new();
    rec(&mut counts.to_vec(), &mut Vec::with_capacity(total), total, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupAmplitudes<T> {
    pub labelings: Vec<Vec<usize>>,
    pub values: Vec<Complex<T>>,
    /// Scale-aware zero threshold of `U[n|m]`.
    pub threshold: T,
}

impl<T: Real> GroupAmplitudes<T> {
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    pub fn all_negligible(&self) -> bool {
        self.values.iter().all(|v| v.norm() < self.threshold)
    }
}

pub fn group_amplitudes<T: Real>(spec: &GroupSpec<T>, u: &NetworkMatrix<T>, m: &OccupationVector) -> Result<GroupAmplitudes<T>> {
    let n = spec.input();
    check_pair(u.modes(), &n, m)?;
    let photons = spec.photons();
    if photons > MAX_GROUP_PHOTONS {
        return Err(Error::size("group-factorized photon number", photons, MAX_GROUP_PHOTONS));
    }
    let k = n.mode_list();
    let l = m.mode_list();
    let slot_groups = spec.slot_groups();
    let rows: Vec<Vec<usize>> =
        (0..spec.groups.len()).map(|q| (0..photons).filter(|&a| slot_groups[a] == q).map(|a| k[a]).collect()).collect();
    let labelings = group_labelings(&spec.counts());
    let values = labelings
        .iter()
        .map(|f| {
            let mut amp = Complex::one();
            for (q, r) in rows.iter().enumerate() {
                let cols: Vec<usize> = (0..photons).filter(|&a| f[a] == q).map(|a| l[a]).collect();
                let sub = CMatrix::from_fn(r.len(), |i, j| u.get(r[i], cols[j]));
                amp = amp * permanent(&sub)?;
            }
            Ok(amp)
        })
        .collect::<Result<_>>()?;
    Ok(GroupAmplitudes { labelings, values, threshold: zero_threshold(&u.submatrix(&n, m)?) })
}

/// Group-factorized probability with ideal detectors, and the amplitudes `A_f`.
pub fn prob_group_factorized<T: Real>(
    spec: &GroupSpec<T>,
    u: &NetworkMatrix<T>,
    m: &OccupationVector,
) -> Result<(ProbabilityResult<T>, GroupAmplitudes<T>)> {
    let amps = group_amplitudes(spec, u, m)?;
    let gram = gram_matrix(&spec.states(), &DetectorModel::Ideal)?;
    let mut total = Complex::zero();
    for (f1, a1) in amps.labelings.iter().zip(&amps.values) {
        if a1.is_zero() {
            continue;
        }
        for (f2, a2) in amps.labelings.iter().zip(&amps.values) {
            let jr = f1.iter().zip(f2).fold(Complex::<T>::one(), |acc, (&x, &y)| acc * gram[(x, y)]);
            total = total + jr * a1.conj() * *a2;
        }
    }
    let n = spec.input();
    let mu = T::lit((m.multiplicity() * n.multiplicity()) as f64);
    let value = total.unscale(mu);
    let p = if value.re < T::zero() && value.re > -T::lit(1e-9) { T::zero() } else { value.re };
    if p < T::zero() {
        return Err(Error::NegativeProbability { value: p.as_f64() });
    }
    let result = ProbabilityResult { output: m.clone(), p, engine: Engine::JMatrix, imag_residual: value.im.abs(), clamped: value.re < T::zero() };
    Ok((result, amps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every group amplitude cancels: zero for every overlap.
    SuppressedByCancellation,
    NotSuppressed,
    /// No classical path reaches the output at all.
    TrivialZero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Setting<T> {
    /// `Some(s)` for synthetic states with overlap `s`; `None` for the spec's own states.
    pub overlap: Option<T>,
    pub p: T,
    pub full_rank: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuppressionRecord<T> {
    pub output: OccupationVector,
    pub amplitudes: Vec<Complex<T>>,
    pub max_amplitude: T,
    pub classical: T,
    pub settings: Vec<Setting<T>>,
    pub verdict: Verdict,
}

impl<T: Real> SuppressionRecord<T> {
    /// A flagged output with nonzero probability, or a zero that the
    /// amplitudes do not explain (at a setting with independent group states).
    pub fn violation(&self) -> Option<String> {
        let zero = T::lit(PROBABILITY_ZERO);
        match self.verdict {
            Verdict::SuppressedByCancellation => self.settings.iter().find(|s| s.p >= zero).map(|s| {
                format!("output {} flagged as suppressed but P = {} at overlap {:?}", self.output, s.p, s.overlap)
            }),
            Verdict::NotSuppressed => self.settings.iter().find(|s| s.full_rank && s.p < zero).map(|s| {
                format!("output {} has P = {} at overlap {:?} without amplitude cancellation", self.output, s.p, s.overlap)
            }),
            Verdict::TrivialZero => None,
        }
    }
}

/// Scans every output of `u`: group amplitudes, verdict, and the full
/// probability (J-matrix engine) at each synthetic overlap setting plus the
/// spec's own states.
pub fn suppression_scan<T: Real>(u: &NetworkMatrix<T>, spec: &GroupSpec<T>) -> Result<Vec<SuppressionRecord<T>>> {
    let q = spec.groups.len();
    let mut variants: Vec<(Option<T>, GroupSpec<T>)> = Vec::new();
    if q > 1 {
        for s in OVERLAP_GRID {
            variants.push((Some(T::lit(s)), spec.with_states(synthetic_states(q, T::lit(s))?)?));
        }
    }
    variants.push((None, spec.clone()));
    let experiments = variants
        .iter()
        .map(|(s, v)| {
            let e = v.experiment(u)?;
            let j = e.shared_jmatrix()?;
            Ok((*s, e, j, v.rank()? == q))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = spec.input();
    let outputs = enumerate_outputs(u.modes(), spec.photons())?;
    outputs
        .par_iter()
        .map(|m| {
            let amps = group_amplitudes(spec, u, m)?;
            let classical = prob_classical(u, &n, m)?.p;
            let verdict = if classical < T::lit(PROBABILITY_ZERO) {
                Verdict::TrivialZero
            } else if amps.all_negligible() {
                Verdict::SuppressedByCancellation
            } else {
                Verdict::NotSuppressed
            };
            let settings = experiments
                .iter()
                .map(|(s, e, j, full_rank)| {
                    Ok(Setting { overlap: *s, p: e.probability_with(Engine::JMatrix, j.as_ref(), m)?.p, full_rank: *full_rank })
                })
                .collect::<Result<_>>()?;
            Ok(SuppressionRecord {
                output: m.clone(),
                max_amplitude: amps.max_abs(),
                amplitudes: amps.values,
                classical,
                settings,
                verdict,
            })
        })
        .collect()
}

/// True when the label pattern alone forces `per(V) = 0` for every network:
/// photon `a` (group `q(a)`) can only reach slot `α` if `j_α = q(a)`; labels
/// `≥ Q` denote directions orthogonal to every group state.
pub fn vanishing_smatrix_filter(labels: &[usize], group_counts: &[usize]) -> bool {
    let n: usize = group_counts.iter().sum();
    if labels.len() != n {
        return true;
    }
    let photon_group: Vec<usize> =
        group_counts.iter().enumerate().flat_map(|(q, &c)| std::iter::repeat_n(q, c)).collect();
    structurally_zero(&Matrix::from_fn(n, |a, alpha| labels[alpha] == photon_group[a]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThreePhotonReport<T> {
    /// Set when some entry of `U` vanishes; the residual analysis does not apply.
    pub trivial_zero_branch: bool,
    pub set_i: [T; 3],
    pub set_ii: [T; 3],
    pub max_i: T,
    pub max_ii: T,
    /// `min(max_i, max_ii)`: zero only if one whole set can be satisfied.
    pub combined: T,
    /// `(γ12γ21)(γ23γ32)(γ13γ31)`, with `γ_ij = U_ij/U_ii`.
    pub pair_product: Complex<T>,
    /// `(γ12γ23γ31)(γ13γ21γ32)`, the same six factors grouped as triples.
    pub triple_product: Complex<T>,
    /// Value the pair relations `γ_ijγ_ji = −1` force on the product.
    pub pair_relations_value: T,
    /// Value the triple relations `γ12γ23γ31 = γ13γ21γ32 = 1` force on it.
    pub triple_relations_value: T,
}

impl<T: Real> ThreePhotonReport<T> {
    pub fn witness_error(&self) -> T {
        (self.pair_product - self.triple_product).norm()
    }
}

/// Three photons with `φ_3 = c_1 φ_1 + c_2 φ_2`: the two sets of amplitude
/// equations an exact zero would require, evaluated on `U` (0-based indices).
pub fn three_photon_incompatibility<T: Real>(u: &CMatrix<T>, c1: Complex<T>, c2: Complex<T>) -> Result<ThreePhotonReport<T>> {
    if u.dim() != 3 {
        return Err(Error::arg(format!("three-photon check needs a 3x3 matrix, got {0}x{0}", u.dim())));
    }
    if c1.is_zero() || c2.is_zero() {
        return Err(Error::arg("c1 and c2 must be nonzero"));
    }
    let e = |i: usize, j: usize| u[(i, j)];
    let set_i = [
        (e(0, 0) * e(1, 1) * e(2, 2) + e(0, 2) * e(1, 1) * e(2, 0)).norm(),
        (e(1, 0) * e(0, 1) * e(2, 2) + e(1, 2) * e(0, 1) * e(2, 0)).norm(),
        (e(0, 0) * e(2, 1) * e(1, 2) + e(0, 2) * e(2, 1) * e(1, 0)).norm(),
    ];
    let set_ii = [
        (e(0, 0) * e(1, 1) * e(2, 2) + e(0, 0) * e(1, 2) * e(2, 1)).norm(),
        (e(1, 0) * e(0, 1) * e(2, 2) + e(1, 0) * e(0, 2) * e(2, 1)).norm(),
        (e(2, 0) * e(1, 1) * e(0, 2) + e(2, 0) * e(1, 2) * e(0, 1)).norm(),
    ];
    let max3 = |s: &[T; 3]| s[0].max(s[1]).max(s[2]);
    let (max_i, max_ii) = (max3(&set_i), max3(&set_ii));
    let scale = u.as_slice().iter().fold(T::zero(), |a, z| a.max(z.norm()));
    let trivial = u.as_slice().iter().any(|z| z.norm() <= T::lit(ZERO_TOLERANCE) * scale);
    let (pair_product, triple_product) = if trivial {
        (Complex::zero(), Complex::zero())
    } else {
        let g = |i: usize, j: usize| e(i, j) / e(i, i);
        (
            g(0, 1) * g(1, 0) * (g(1, 2) * g(2, 1)) * (g(0, 2) * g(2, 0)),
            (g(0, 1) * g(1, 2) * g(2, 0)) * (g(0, 2) * g(1, 0) * g(2, 1)),
        )
    };
    Ok(ThreePhotonReport {
        trivial_zero_branch: trivial,
        set_i,
        set_ii,
        max_i,
        max_ii,
        combined: max_i.min(max_ii),
        pair_product,
        triple_product,
        pair_relations_value: -T::one(),
        triple_relations_value: T::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(modes: usize, groups: Vec<Vec<usize>>, s: f64) -> GroupSpec<f64> {
        let states = synthetic_states(groups.len(), s).unwrap();
        GroupSpec::new(modes, states.into_iter().zip(groups).map(|(state, modes)| Group { state, modes }).collect()).unwrap()
    }

    #[test]
    fn labelings_count() {
        assert_eq!(group_labelings(&[2, 2]).len(), 6);
        assert_eq!(group_labelings(&[3]).len(), 1);
        assert_eq!(group_labelings(&[1, 1, 1]).len(), 6);
    }

    #[test]
    fn fourier3_single_group() {
        let u = NetworkMatrix::<f64>::fourier(3).unwrap();
        let sp = spec(3, vec![vec![0, 1, 2]], 0.0);
        let recs = suppression_scan(&u, &sp).unwrap();
        let find = |c: &[usize]| recs.iter().find(|r| r.output.counts() == c).unwrap();
        assert_eq!(find(&[2, 1, 0]).verdict, Verdict::SuppressedByCancellation);
        let r = find(&[1, 1, 1]);
        assert_eq!(r.verdict, Verdict::NotSuppressed);
        assert!((r.settings[0].p - 1.0 / 3.0).abs() < 1e-12);
        assert!(recs.iter().all(|r| r.violation().is_none()));
    }

    #[test]
    fn factorized_matches_jmatrix() {
        let u = NetworkMatrix::<f64>::random_unitary(4, 3).unwrap();
        let sp = spec(4, vec![vec![0, 2], vec![1]], 0.4);
        let e = sp.experiment(&u).unwrap();
        for m in enumerate_outputs(4, 3).unwrap() {
            let (pf, _) = prob_group_factorized(&sp, &u, &m).unwrap();
            let pj = e.probability(Engine::JMatrix, &m).unwrap().p;
            assert!((pf.p - pj).abs() < 1e-12, "{m}: {} vs {pj}", pf.p);
        }
    }

    #[test]
    fn identity_network_has_no_flags() {
        let u = NetworkMatrix::<f64>::identity(3);
        let sp = spec(3, vec![vec![0, 1], vec![2]], 0.3);
        let recs = suppression_scan(&u, &sp).unwrap();
        assert!(recs.iter().all(|r| r.verdict != Verdict::SuppressedByCancellation));
        assert!(recs.iter().all(|r| r.violation().is_none()));
    }

    #[test]
    fn smatrix_filter_examples() {
        assert!(!vanishing_smatrix_filter(&[1, 0, 1, 0], &[2, 2]));
        assert!(vanishing_smatrix_filter(&[0, 0, 0, 1], &[2, 2]));
        assert!(vanishing_smatrix_filter(&[0, 2, 1], &[2, 1]));
        assert!(!vanishing_smatrix_filter(&[0, 0, 0], &[3]));
        assert!(vanishing_smatrix_filter(&[0, 1, 0], &[3]));
    }

    #[test]
    fn three_photon_fourier() {
        let f3 = NetworkMatrix::<f64>::fourier(3).unwrap();
        let r = three_photon_incompatibility(f3.matrix(), Complex::new(0.5, 0.0), Complex::new(0.0, 0.5)).unwrap();
        assert!(!r.trivial_zero_branch);
        assert!(r.max_i > 1e-3 && r.max_ii > 1e-3);
        assert!(r.witness_error() < 1e-12);
        let id = CMatrix::<f64>::identity(3);
        assert!(three_photon_incompatibility(&id, Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)).unwrap().trivial_zero_branch);
    }
}
