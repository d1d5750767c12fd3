//! Random experiments for cross-engine checks.

use indist::network::{NetworkMatrix, OccupationVector};
use indist::probability::Experiment;
use indist::spectral::{DetectorModel, FiniteRankState, GaussianState, MixedState, PureState};
use indist::{CMatrix64, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhotonKind {
    Gaussian,
    /// Gaussians with a randomly jittered arrival time.
    Jitter,
    FiniteRank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Ideal,
    Flat,
    /// Gaussian band for spectral photons, a random operator for finite-rank ones.
    Filtered,
}

#[derive(Clone, Debug)]
pub struct InstanceConfig {
    pub min_modes: usize,
    pub max_modes: usize,
    pub max_photons: usize,
    /// Quadrature order of jittered photons. Kept small so that the
    /// component-enumerating engines stay cheap.
    pub jitter_nodes: usize,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig { min_modes: 2, max_modes: 5, max_photons: 4, jitter_nodes: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub index: usize,
    pub photon_kind: PhotonKind,
    pub detector_kind: DetectorKind,
    pub experiment: Experiment<f64>,
}

impl Instance {
    pub fn describe(&self) -> String {
        let e = &self.experiment;
        format!(
            "#{} M={} n={} {:?}/{:?}",
            self.index,
            e.network().modes(),
            e.input(),
            self.photon_kind,
            self.detector_kind
        )
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Result<GaussianState<f64>> {
    let pol = u8::from(rng.gen_bool(0.2));
    GaussianState::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.6..1.4), rng.gen_range(-1.0..1.0), pol)
}

fn finite_rank(rng: &mut ChaCha8Rng, r: usize) -> Result<FiniteRankState<f64>> {
    FiniteRankState::normalized((0..r).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
}

/// `V diag(λ) V†` with Haar `V` and `λ ∈ [0.3, 1]`.
fn random_operator(rng: &mut ChaCha8Rng, r: usize) -> Result<DetectorModel<f64>> {
    let v = NetworkMatrix::<f64>::random_unitary(r, rng.gen())?;
    let v = v.matrix();
    let lambda: Vec<f64> = (0..r).map(|_| rng.gen_range(0.3..1.0)).collect();
    let op = CMatrix64::from_fn(r, |i, j| (0..r).map(|k| v[(i, k)] * lambda[k] * v[(j, k)].conj()).sum());
    DetectorModel::operator(op)
}

fn detector(rng: &mut ChaCha8Rng, kind: DetectorKind, photons: PhotonKind, r: usize) -> Result<DetectorModel<f64>> {
    match (kind, photons) {
        (DetectorKind::Ideal, _) => Ok(DetectorModel::Ideal),
        (DetectorKind::Flat, _) => DetectorModel::flat(rng.gen_range(0.5..1.0)),
        (DetectorKind::Filtered, PhotonKind::FiniteRank) => random_operator(rng, r),
        (DetectorKind::Filtered, _) => {
            DetectorModel::gaussian_band(rng.gen_range(-1.0..1.0), rng.gen_range(0.8..2.0), rng.gen_range(0.6..1.0))
        }
    }
}

/// One random experiment. Photon and detector kinds are fixed by the caller;
/// everything else is drawn from `rng`.
pub fn random_experiment(
    rng: &mut ChaCha8Rng,
    cfg: &InstanceConfig,
    photon_kind: PhotonKind,
    detector_kind: DetectorKind,
) -> Result<Experiment<f64>> {
    let m = rng.gen_range(cfg.min_modes..=cfg.max_modes);
    let n = rng.gen_range(1..=cfg.max_photons);
    let u = NetworkMatrix::random_unitary(m, rng.gen())?;
    let mut counts = vec![0; m];
    for _ in 0..n {
        counts[rng.gen_range(0..m)] += 1;
    }
    let input = OccupationVector::new(counts.clone());
    let r = rng.gen_range(2..=3);
    let mut photons = Vec::with_capacity(n);
    for &c in counts.iter().filter(|&&c| c > 0) {
        // Photons sharing a mode must be one pure state.
        let state = match photon_kind {
            PhotonKind::Gaussian => MixedState::Pure(PureState::Gaussian(gaussian(rng)?)),
            PhotonKind::Jitter if c == 1 => {
                let base = GaussianState { pol: 0, ..gaussian(rng)? };
                MixedState::arrival_jitter(base, rng.gen_range(0.2..0.8), cfg.jitter_nodes)?
            }
            PhotonKind::Jitter => MixedState::Pure(PureState::Gaussian(GaussianState { pol: 0, ..gaussian(rng)? })),
            PhotonKind::FiniteRank => MixedState::Pure(PureState::FiniteRank(finite_rank(rng, r)?)),
        };
        photons.extend(std::iter::repeat_n(state, c));
    }
    let detectors = (0..m).map(|_| detector(rng, detector_kind, photon_kind, r)).collect::<Result<Vec<_>>>()?;
    Experiment::new(u, input, photons, detectors)
}

/// `count` experiments cycling through all photon/detector kind pairs.
pub fn random_instances(seed: u64, count: usize, cfg: &InstanceConfig) -> Result<Vec<Instance>> {
    const PHOTONS: [PhotonKind; 3] = [PhotonKind::Gaussian, PhotonKind::Jitter, PhotonKind::FiniteRank];
    const DETECTORS: [DetectorKind; 3] = [DetectorKind::Ideal, DetectorKind::Flat, DetectorKind::Filtered];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let photon_kind = PHOTONS[index % 3];
            let detector_kind = DETECTORS[(index / 3) % 3];
            let experiment = random_experiment(&mut rng, cfg, photon_kind, detector_kind)?;
            Ok(Instance { index, photon_kind, detector_kind, experiment })
        })
        .collect()
}
