//! Boson sampling with identical Gaussian sources whose arrival times
//! fluctuate. Everything downstream of the source model is a function of the
//! classicality parameter `γ = 2η²/(1+2η²)`, `η = Δω·Δτ`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::jmatrix::{normalized_purity, JMatrix, PurityReport};
use crate::spectral::{converge_nodes, Converged, GaussianState, MixedState, DEFAULT_QUADRATURE_NODES, QUADRATURE_DRIFT};
use crate::symgroup::{cycle_index, CycleType, MAX_ENUMERATION};
use crate::Real;

/// Node cap for the quadrature cross-check of `g_k`.
pub const MAX_QUADRATURE_NODES: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BSParams<T> {
    n: usize,
    gamma: T,
}

impl<T: Real> BSParams<T> {
    pub fn from_gamma(n: usize, gamma: T) -> Result<Self> {
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(Error::Domain(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        Ok(BSParams { n, gamma })
    }

    pub fn from_eta(n: usize, eta: T) -> Result<Self> {
        if !(eta >= T::zero()) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta must be finite and nonnegative, got {eta}")));
        }
        let e2 = eta * eta;
        let two = T::lit(2.0);
        Self::from_gamma(n, two * e2 / (T::one() + two * e2))
    }

    /// Spectral width `Δω` and arrival-time spread `Δτ`.
    pub fn from_physical(n: usize, spectral_width: T, time_spread: T) -> Result<Self> {
        if !(spectral_width > T::zero()) || !(time_spread >= T::zero()) {
            return Err(Error::Domain("need spectral width > 0 and time spread >= 0".into()));
        }
        Self::from_eta(n, spectral_width * time_spread)
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// `η = √(γ / (2(1−γ)))`.
    pub fn eta(&self) -> T {
        (self.gamma / (T::lit(2.0) * (T::one() - self.gamma))).sqrt()
    }
}

/// `g_k = (1−γ)^{k/2} (1−γ^k)^{-1/2}`.
pub fn gk_closed<T: Real>(gamma: T, k: usize) -> Result<T> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::Domain(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if k == 0 {
        return Err(Error::arg("g_k needs k >= 1"));
    }
    if k == 1 {
        return Ok(T::one());
    }
    let kf = T::from_usize_exact(k);
    Ok((T::one() - gamma).powf(kf / T::lit(2.0)) / (T::one() - gamma.powi(k as i32)).sqrt())
}

/// Exact `Tr{ρ^k}` of the jittered Gaussian source,
/// `(1−a)^k / (1−a^k)` with `a = (1 − √(1−γ²))/γ`.
///
/// The cyclic Gaussian integral gives `det(I + η²L)^{-1/2}`, `L` the Laplacian
/// of the `k`-cycle, which factors into this thermal form. It agrees with
/// [`gk_closed`] for `k ≤ 2` only; for `k ≥ 3` the closed form is not the
/// trace of any state of this model, and its `J` is not PSD for `N ≥ 3`.
pub fn gk_exact<T: Real>(gamma: T, k: usize) -> Result<T> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::Domain(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if k == 0 {
        return Err(Error::arg("g_k needs k >= 1"));
    }
    if k == 1 || gamma == T::zero() {
        return Ok(T::one());
    }
    // γ/(1 + √(1−γ²)) is the cancellation-free form of a.
    let a = gamma / (T::one() + (T::one() - gamma * gamma).sqrt());
    Ok((T::one() - a).powi(k as i32) / (T::one() - a.powi(k as i32)))
}

/// `J` entry for a pair whose relative permutation has cycle type `ct`: `∏_k g_k^{C_k}`.
pub fn j_entry<T: Real>(params: &BSParams<T>, ct: &CycleType) -> Result<T> {
    if ct.degree() != params.n {
        return Err(Error::arg(format!("cycle type of degree {} for N = {}", ct.degree(), params.n)));
    }
    let mut v = T::one();
    for (i, &c) in ct.counts().iter().enumerate() {
        if c > 0 {
            v = v * gk_closed(params.gamma, i + 1)?.powi(c as i32);
        }
    }
    Ok(v)
}

/// Cycle-compressed `J` of the model.
pub fn jmatrix<T: Real>(params: &BSParams<T>) -> Result<JMatrix<T>> {
    let cts = CycleType::all(params.n);
    let values = cts.iter().map(|ct| j_entry(params, ct)).collect::<Result<Vec<T>>>()?;
    let table: std::collections::HashMap<CycleType, T> = cts.into_iter().zip(values).collect();
    Ok(JMatrix::from_cycle_function(params.n, |ct| Complex::new(table[ct], T::zero())))
}

/// Cycle-compressed `J` built from [`gk_exact`] instead of the closed form.
pub fn jmatrix_exact<T: Real>(params: &BSParams<T>) -> Result<JMatrix<T>> {
    let n = params.n;
    let g = (1..=n).map(|k| gk_exact(params.gamma, k)).collect::<Result<Vec<T>>>()?;
    Ok(JMatrix::from_cycle_function(n, |ct| {
        let v = ct.counts().iter().zip(&g).fold(T::one(), |acc, (&c, &gk)| acc * gk.powi(c as i32));
        Complex::new(v, T::zero())
    }))
}

/// `Tr{(J/N!)²} = (1−γ)^N / ∏_{k=1}^N (1−γ^k)`, normalized.
pub fn purity_closed<T: Real>(params: &BSParams<T>) -> PurityReport<T> {
    let g = params.gamma;
    let mut trace = T::one();
    for k in 1..=params.n {
        trace = trace * (T::one() - g) / (T::one() - g.powi(k as i32));
    }
    normalized_purity(params.n, trace)
}

/// `Tr{(J/N!)²} = (1−γ)^N Z_N(1/(1−γ), 1/(1−γ²), …)` through the cycle index.
pub fn purity_direct<T: Real>(params: &BSParams<T>) -> Result<PurityReport<T>> {
    let n = params.n;
    if n > MAX_ENUMERATION {
        return Err(Error::size("cycle-index degree", n, MAX_ENUMERATION));
    }
    let g = params.gamma;
    let a: Vec<T> = (1..=n).map(|k| (T::one() - g.powi(k as i32)).recip()).collect();
    let trace = (T::one() - g).powi(n as i32) * cycle_index(n, &a)?;
    Ok(normalized_purity(n, trace))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallGammaReport<T> {
    pub trace: T,
    /// `1 − 2(N−1)η²`.
    pub approximation: T,
    pub deviation: T,
    /// `deviation / (η⁴ N²)`; zero when `η = 0`.
    pub coefficient: T,
}

pub fn small_gamma_expansion_check<T: Real>(params: &BSParams<T>) -> Result<SmallGammaReport<T>> {
    let eta = params.eta();
    let e2 = eta * eta;
    if e2 > T::lit(1e-3) {
        return Err(Error::Domain(format!("small-gamma expansion needs eta^2 <= 1e-3, got {e2}")));
    }
    let trace = purity_closed(params).trace_sq;
    let nm1 = T::from_usize_exact(params.n.saturating_sub(1));
    let approximation = T::one() - T::lit(2.0) * nm1 * e2;
    let deviation = (trace - approximation).abs();
    let nf = T::from_usize_exact(params.n);
    let scale = e2 * e2 * nf * nf;
    let coefficient = if scale > T::zero() { deviation / scale } else { T::zero() };
    Ok(SmallGammaReport { trace, approximation, deviation, coefficient })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurityRow<T> {
    pub gamma: T,
    pub n: usize,
    /// `None` for `N = 1`.
    pub purity: Option<T>,
    pub trace: T,
}

/// Closed-form purity table, `γ` ascending in the outer loop and `N` in list
/// order within each `γ`.
pub fn purity_curve<T: Real>(n_list: &[usize], gammas: &[T]) -> Result<Vec<PurityRow<T>>> {
    let mut sorted = gammas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("gamma grid must not contain NaN"));
    let mut rows = Vec::with_capacity(sorted.len() * n_list.len());
    for &gamma in &sorted {
        for &n in n_list {
            let report = purity_closed(&BSParams::from_gamma(n, gamma)?);
            rows.push(PurityRow { gamma, n, purity: report.purity, trace: report.trace_sq });
        }
    }
    Ok(rows)
}

/// Mixed single-photon state of the model: unit-width Gaussian at `Ω = 0`
/// with arrival-time standard deviation `η`.
pub fn source_state<T: Real>(params: &BSParams<T>, nodes: usize) -> Result<MixedState<T>> {
    let base = GaussianState::new(T::zero(), T::one(), T::zero(), 0)?;
    MixedState::arrival_jitter(base, params.eta(), nodes)
}

/// `g_k` of the source state by quadrature, refined until two successive
/// orders agree to the default drift tolerance.
pub fn gk_quadrature<T: Real>(gamma: T, k: usize) -> Result<Converged<T>> {
    let params = BSParams::from_gamma(k, gamma)?;
    converge_nodes(
        |nodes| crate::spectral::gk_trace(&source_state(&params, nodes)?, &crate::spectral::DetectorModel::Ideal, k),
        DEFAULT_QUADRATURE_NODES,
        QUADRATURE_DRIFT,
        MAX_QUADRATURE_NODES,
    )
}
