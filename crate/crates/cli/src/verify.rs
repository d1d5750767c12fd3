//! Cross-engine and invariant checks on seeded random experiments.
//!
//! With `inject_fault` set, one off-diagonal `J` entry pair is negated before
//! use. A healthy harness must then report failures.

use indist::bosonsampling::{purity_closed, purity_direct, BSParams};
use indist::jmatrix::JMatrix;
use indist::network::{NetworkMatrix, OccupationVector};
use indist::probability::{prob_jmatrix, Engine, Experiment};
use indist::spectral::{DetectorModel, GaussianState, MixedState, PureState};
use indist::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::instances::{random_instances, Instance, InstanceConfig};

/// Engines compared against each other. `classical` and `ideal` ignore the
/// photon states and are excluded.
pub const EQUIVALENCE_ENGINES: [Engine; 4] = [Engine::JMatrix, Engine::PermanentBasis, Engine::General, Engine::Oracle];

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub instances: usize,
    pub psd_builds: usize,
    /// Tolerance for engine equivalence and normalization.
    pub tol: f64,
    pub psd_tol: f64,
    pub purity_tol: f64,
    pub inject_fault: bool,
    pub instance: InstanceConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 1,
            instances: 50,
            psd_builds: 30,
            tol: 1e-9,
            psd_tol: 1e-9,
            purity_tol: 1e-10,
            inject_fault: false,
            instance: InstanceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= tolerance`; NaN fails.
    fn at_most(name: &'static str, value: f64, tolerance: f64, detail: String) -> Self {
        Check { name, passed: value <= tolerance, value, tolerance, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub inject_fault: bool,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Negates the largest off-diagonal entry pair in row 0, so the fault is
/// never a no-op on a nonzero row.
pub fn faulted(j: &JMatrix<f64>) -> Result<JMatrix<f64>> {
    let d = j.dimension();
    if d < 2 {
        return Ok(j.clone());
    }
    let k = (1..d).max_by(|&a, &b| j.entry_at(0, a).norm().total_cmp(&j.entry_at(0, b).norm())).expect("d >= 2");
    j.with_negated_entry(0, k)
}

/// J-matrix distribution, optionally through a faulted `J`.
pub fn jmatrix_distribution(e: &Experiment<f64>, fault: bool) -> Result<Vec<f64>> {
    if !fault {
        return Ok(e.distribution(Engine::JMatrix)?.outputs.iter().map(|r| r.p).collect());
    }
    indist::network::enumerate_outputs(e.network().modes(), e.input().total())?
        .iter()
        .map(|m| Ok(prob_jmatrix(&faulted(&e.jmatrix(m)?)?, e.network(), e.input(), m)?.p))
        .collect()
}

/// `Ok(None)`: the engine does not apply to the instance.
pub type EngineOutcome = std::result::Result<Option<Vec<f64>>, String>;

#[derive(Clone, Debug)]
pub struct EngineComparison {
    /// Per-engine distributions in output enumeration order. `Ok(None)` marks
    /// an engine that does not accept the input (e.g. permanent-basis with a
    /// multiply occupied mode); `Err` is a genuine failure.
    pub distributions: Vec<(Engine, EngineOutcome)>,
    pub max_discrepancy: f64,
}

impl EngineComparison {
    pub fn errors(&self) -> Vec<String> {
        self.distributions.iter().filter_map(|(e, d)| d.as_ref().err().map(|msg| format!("{e}: {msg}"))).collect()
    }

    pub fn sums(&self) -> Vec<(Engine, f64)> {
        self.distributions
            .iter()
            .filter_map(|(e, d)| match d {
                Ok(Some(d)) => Some((*e, d.iter().sum())),
                Ok(None) => None,
                Err(_) => Some((*e, f64::NAN)),
            })
            .collect()
    }
}

pub fn compare_engines(inst: &Instance, fault: bool) -> EngineComparison {
    let distributions: Vec<_> = EQUIVALENCE_ENGINES
        .iter()
        .map(|&engine| {
            let d = if engine == Engine::JMatrix {
                jmatrix_distribution(&inst.experiment, fault)
            } else {
                inst.experiment.distribution(engine).map(|d| d.outputs.iter().map(|r| r.p).collect())
            };
            let d = match d {
                Ok(d) => Ok(Some(d)),
                Err(Error::Unsupported(_)) => Ok(None),
                Err(e) => Err(e.to_string()),
            };
            (engine, d)
        })
        .collect();
    let mut max_discrepancy: f64 = 0.0;
    for (a, (_, da)) in distributions.iter().enumerate() {
        for (_, db) in &distributions[a + 1..] {
            match (da, db) {
                (Ok(None), _) | (_, Ok(None)) => {}
                (Ok(Some(x)), Ok(Some(y))) => {
                    for (p, q) in x.iter().zip(y) {
                        max_discrepancy = max_discrepancy.max((p - q).abs());
                    }
                }
                _ => max_discrepancy = f64::INFINITY,
            }
        }
    }
    EngineComparison { distributions, max_discrepancy }
}

/// Identical unit Gaussians into the first `N` modes of a Haar network,
/// read out by flat detectors of efficiency `η`.
pub fn flat_identical_experiment(rng: &mut ChaCha8Rng, cfg: &InstanceConfig) -> Result<(Experiment<f64>, f64)> {
    let m = rng.gen_range(cfg.min_modes..=cfg.max_modes);
    let n = rng.gen_range(1..=cfg.max_photons.min(m));
    let eta = rng.gen_range(0.3..1.0);
    let state = MixedState::Pure(PureState::Gaussian(GaussianState::new(0.0, 1.0, 0.0, 0)?));
    let e = Experiment::new(
        NetworkMatrix::random_unitary(m, rng.gen())?,
        OccupationVector::first_modes(m, n),
        vec![state; n],
        vec![DetectorModel::flat(eta)?],
    )?;
    Ok((e, eta.powi(n as i32)))
}

fn worst(items: impl IntoIterator<Item = (f64, String)>) -> (f64, String) {
    items.into_iter().fold((0.0, String::new()), |acc, (v, d)| if !(v <= acc.0) { (v, d) } else { acc })
}

pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let instances = random_instances(cfg.seed, cfg.instances, &cfg.instance)?;
    let comparisons: Vec<EngineComparison> = instances.iter().map(|i| compare_engines(i, cfg.inject_fault)).collect();
    let mut checks = Vec::new();

    let (value, detail) =
        worst(instances.iter().zip(&comparisons).map(|(i, c)| {
            let errors = c.errors();
            let detail = if errors.is_empty() { i.describe() } else { format!("{} [{}]", i.describe(), errors.join("; ")) };
            (c.max_discrepancy, detail)
        }));
    checks.push(Check::at_most("engine-equivalence", value, cfg.tol, detail));

    let (value, detail) = worst(instances.iter().zip(&comparisons).filter(|(i, _)| i.experiment.all_ideal()).flat_map(
        |(i, c)| c.sums().into_iter().map(move |(e, s)| ((s - 1.0).abs(), format!("{} engine={e}", i.describe()))),
    ));
    checks.push(Check::at_most("normalization-ideal", value, cfg.tol, detail));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_f1a7);
    let mut flat = Vec::new();
    for k in 0..10 {
        let (e, expected) = flat_identical_experiment(&mut rng, &cfg.instance)?;
        let sum: f64 = jmatrix_distribution(&e, cfg.inject_fault).map_or(f64::NAN, |d| d.iter().sum());
        flat.push(((sum - expected).abs(), format!("flat #{k} M={} n={}", e.network().modes(), e.input())));
    }
    let (value, detail) = worst(flat);
    checks.push(Check::at_most("normalization-flat", value, cfg.tol, detail));

    let psd_cfg = InstanceConfig { max_photons: 5, ..cfg.instance.clone() };
    let builds = random_instances(cfg.seed.wrapping_add(1), cfg.psd_builds, &psd_cfg)?;
    let mut min_eig = (f64::INFINITY, String::new());
    for inst in &builds {
        let e = &inst.experiment;
        let first = indist::network::enumerate_outputs(e.network().modes(), e.input().total())?.remove(0);
        let mut j = e.jmatrix(&first)?;
        if cfg.inject_fault {
            j = faulted(&j)?;
        }
        let v = j.min_eigenvalue()?;
        if !(v >= min_eig.0) {
            min_eig = (v, inst.describe());
        }
    }
    checks.push(Check {
        name: "jmatrix-psd",
        passed: min_eig.0 >= -cfg.psd_tol,
        value: min_eig.0,
        tolerance: -cfg.psd_tol,
        detail: min_eig.1,
    });

    let mut purity = Vec::new();
    for n in 2..=10 {
        for g in 1..=9 {
            let params = BSParams::from_gamma(n, g as f64 / 10.0)?;
            let d = (purity_closed(&params).trace_sq - purity_direct(&params)?.trace_sq).abs();
            purity.push((d, format!("N={n} gamma=0.{g}")));
        }
    }
    let (value, detail) = worst(purity);
    checks.push(Check::at_most("purity-closed-vs-direct", value, cfg.purity_tol, detail));

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { seed: cfg.seed, inject_fault: cfg.inject_fault, passed, checks })
}
