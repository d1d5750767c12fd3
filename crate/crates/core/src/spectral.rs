//! Single-photon spectral states, detector sensitivity operators and the
//! detector-weighted overlaps `⟨φ_a|Γ|φ_b⟩` everything else is built from.
//!
//! A Gaussian state has amplitude
//! `φ(ω) = (2πΔ²)^{-1/4} exp(iωt − (ω−Ω)²/(4Δ²))` in polarization `s`.
//! Detectors act identically on both polarizations, so overlaps of Gaussian
//! states carry a Kronecker delta in `s` times a frequency integral. The
//! `GaussianBand` detector has sensitivity `peak · exp(−(ω−center)²/(2 width²))`.
//! Products of Gaussians integrate in closed form; everything else is done in
//! the finite-rank restriction of the detector operator to the span of the
//! states involved.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{gauss_hermite, hermitian_eigen};
use crate::matrix::CMatrix;
use crate::Real;

/// Relative eigenvalue cut of the Gram matrix below which directions are dropped.
pub const RANK_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_QUADRATURE_NODES: usize = 32;
/// Relative drift allowed when doubling the quadrature order.
pub const QUADRATURE_DRIFT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianState<T> {
    /// Center frequency Ω.
    pub omega: T,
    /// Spectral width Δ > 0.
    pub delta: T,
    /// Arrival time t.
    pub t: T,
    /// Polarization index, 0 or 1.
    pub pol: u8,
}

impl<T: Real> GaussianState<T> {
    pub fn new(omega: T, delta: T, t: T, pol: u8) -> Result<Self> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::arg(format!("spectral width must be positive and finite, got {delta}")));
        }
        if !omega.is_finite() || !t.is_finite() {
            return Err(Error::arg("center frequency and arrival time must be finite"));
        }
        if pol > 1 {
            return Err(Error::arg(format!("polarization index must be 0 or 1, got {pol}")));
        }
        Ok(GaussianState { omega, delta, t, pol })
    }

    pub fn delayed(&self, tau: T) -> Self {
        GaussianState { t: self.t + tau, ..*self }
    }

    /// `φ(ω)` in this state's polarization.
    pub fn amplitude(&self, w: T) -> Complex<T> {
        let two_pi = T::TAU();
        let norm = (two_pi * self.delta * self.delta).powf(T::lit(-0.25));
        let d = w - self.omega;
        let envelope = norm * (-(d * d) / (T::lit(4.0) * self.delta * self.delta)).exp();
        Complex::from_polar(envelope, w * self.t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRankState<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> FiniteRankState<T> {
    /// Coefficients over an orthonormal internal basis; must have unit norm.
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::arg("finite-rank state needs at least one coefficient"));
        }
        let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if (norm - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::arg(format!("finite-rank state has norm {norm}, expected 1")));
        }
        Ok(FiniteRankState { coeffs })
    }

    pub fn normalized(coeffs: Vec<Complex<T>>) -> Result<Self> {
        let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::arg("cannot normalize a zero vector"));
        }
        Self::new(coeffs.into_iter().map(|z| z.unscale(norm)).collect())
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PureState<T> {
    Gaussian(GaussianState<T>),
    FiniteRank(FiniteRankState<T>),
}

impl<T> From<GaussianState<T>> for PureState<T> {
    fn from(g: GaussianState<T>) -> Self {
        PureState::Gaussian(g)
    }
}

impl<T> From<FiniteRankState<T>> for PureState<T> {
    fn from(f: FiniteRankState<T>) -> Self {
        PureState::FiniteRank(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DetectorModel<T> {
    Ideal,
    Flat { eta: T },
    GaussianBand { center: T, width: T, peak: T },
    /// Hermitian operator on the internal basis of finite-rank states.
    Matrix(CMatrix<T>),
}

impl<T: Real> DetectorModel<T> {
    pub fn flat(eta: T) -> Result<Self> {
        if !(T::zero()..=T::one()).contains(&eta) {
            return Err(Error::arg(format!("flat efficiency must lie in [0,1], got {eta}")));
        }
        Ok(DetectorModel::Flat { eta })
    }

    pub fn gaussian_band(center: T, width: T, peak: T) -> Result<Self> {
        if !(width > T::zero()) || !center.is_finite() || !width.is_finite() {
            return Err(Error::arg("band detector needs finite center and positive width"));
        }
        if !(T::zero()..=T::one()).contains(&peak) {
            return Err(Error::arg(format!("band peak efficiency must lie in [0,1], got {peak}")));
        }
        Ok(DetectorModel::GaussianBand { center, width, peak })
    }

    /// Operator detector; must be Hermitian with spectrum in `[0,1]`.
    pub fn operator(op: CMatrix<T>) -> Result<Self> {
        let tol = T::lit(1e-10);
        if op.dim() == 0 || op.hermiticity_deviation() > tol {
            return Err(Error::arg("detector operator must be a nonempty Hermitian matrix"));
        }
        let eig = hermitian_eigen(&op);
        if eig.values.iter().any(|&l| l < -tol || l > T::one() + tol) {
            return Err(Error::arg("detector operator eigenvalues must lie in [0,1]"));
        }
        Ok(DetectorModel::Matrix(op))
    }

    /// Pointwise sensitivity for the frequency-resolved kinds.
    pub fn sensitivity(&self, w: T) -> Option<T> {
        match self {
            DetectorModel::Ideal => Some(T::one()),
            DetectorModel::Flat { eta } => Some(*eta),
            DetectorModel::GaussianBand { center, width, peak } => {
                let d = w - *center;
                Some(*peak * (-(d * d) / (T::lit(2.0) * *width * *width)).exp())
            }
            DetectorModel::Matrix(_) => None,
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, DetectorModel::Ideal)
    }
}

/// `⟨φ_a|Γ|φ_b⟩`.
pub fn overlap<T: Real>(a: &PureState<T>, det: &DetectorModel<T>, b: &PureState<T>) -> Result<Complex<T>> {
    match (a, b) {
        (PureState::Gaussian(a), PureState::Gaussian(b)) => gaussian_overlap(a, det, b),
        (PureState::FiniteRank(a), PureState::FiniteRank(b)) => {
            if a.dim() != b.dim() {
                return Err(Error::arg(format!("finite-rank states of dimension {} and {}", a.dim(), b.dim())));
            }
            let dot = |v: &[Complex<T>]| a.coeffs.iter().zip(v).fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y);
            match det {
                DetectorModel::Ideal => Ok(dot(&b.coeffs)),
                DetectorModel::Flat { eta } => Ok(dot(&b.coeffs).scale(*eta)),
                DetectorModel::Matrix(op) if op.dim() == b.dim() => Ok(dot(&op.matvec(&b.coeffs))),
                DetectorModel::Matrix(op) => Err(Error::arg(format!(
                    "detector operator of dimension {} applied to states of dimension {}",
                    op.dim(),
                    b.dim()
                ))),
                DetectorModel::GaussianBand { .. } => {
                    Err(Error::arg("band detector needs frequency-resolved (Gaussian) states"))
                }
            }
        }
        _ => Err(Error::arg("cannot overlap a Gaussian state with a finite-rank state")),
    }
}

fn gaussian_overlap<T: Real>(a: &GaussianState<T>, det: &DetectorModel<T>, b: &GaussianState<T>) -> Result<Complex<T>> {
    if a.pol != b.pol {
        if let DetectorModel::Matrix(_) = det {
            return Err(Error::arg("operator detector needs finite-rank states"));
        }
        return Ok(Complex::zero());
    }
    let four = T::lit(4.0);
    // Exponent −Σ w_i (ω − μ_i)² + iωτ integrated over ω, in completed-square form.
    let mut terms = vec![
        (T::one() / (four * a.delta * a.delta), a.omega),
        (T::one() / (four * b.delta * b.delta), b.omega),
    ];
    let prefactor = match det {
        DetectorModel::Ideal => T::one(),
        DetectorModel::Flat { eta } => *eta,
        DetectorModel::GaussianBand { center, width, peak } => {
            terms.push((T::one() / (T::lit(2.0) * *width * *width), *center));
            *peak
        }
        DetectorModel::Matrix(_) => return Err(Error::arg("operator detector needs finite-rank states")),
    };
    let big_a: T = terms.iter().map(|t| t.0).sum();
    let mean = terms.iter().map(|t| t.0 * t.1).sum::<T>() / big_a;
    let mut spread = T::zero();
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            let d = terms[i].1 - terms[j].1;
            spread = spread + terms[i].0 * terms[j].0 * d * d;
        }
    }
    spread = spread / big_a;
    let tau = b.t - a.t;
    let norm = (T::TAU() * a.delta * a.delta).powf(T::lit(-0.25)) * (T::TAU() * b.delta * b.delta).powf(T::lit(-0.25));
    let magnitude = prefactor * norm * (T::PI() / big_a).sqrt() * (-spread - tau * tau / (four * big_a)).exp();
    Ok(Complex::from_polar(magnitude, mean * tau))
}

/// Matrix of `⟨φ_a|Γ|φ_b⟩`.
pub fn gram_matrix<T: Real>(states: &[PureState<T>], det: &DetectorModel<T>) -> Result<CMatrix<T>> {
    let n = states.len();
    let mut g = CMatrix::zeros(n);
    for a in 0..n {
        for b in a..n {
            let v = overlap(&states[a], det, &states[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
    }
    for a in 0..n {
        g[(a, a)] = Complex::new(g[(a, a)].re, T::zero());
    }
    Ok(g)
}

/// Orthonormal basis of the span of a list of states, from the eigenvectors
/// of their Gram matrix.
#[derive(Clone, Debug)]
pub struct Orthonormalized<T> {
    pub rank: usize,
    /// Absolute eigenvalue cut that was applied.
    pub threshold: T,
    /// Gram eigenvalues of the retained directions.
    pub eigenvalues: Vec<T>,
    /// `coeffs[a][i] = ⟨e_i|φ_a⟩`.
    pub coeffs: Vec<Vec<Complex<T>>>,
    /// `e_i = Σ_b synthesis[b][i] |φ_b⟩`.
    pub synthesis: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Orthonormalized<T> {
    pub fn state(&self, a: usize) -> FiniteRankState<T> {
        FiniteRankState { coeffs: self.coeffs[a].clone() }
    }

    /// Matrix of `⟨e_i|K|e_j⟩` given the Gram matrix `⟨φ_a|K|φ_b⟩` of the original states.
    pub fn restrict_gram(&self, gram: &CMatrix<T>) -> CMatrix<T> {
        let w = &self.synthesis;
        let n = w.len();
        CMatrix::from_fn(self.rank, |i, j| {
            let mut acc = Complex::zero();
            for a in 0..n {
                for b in 0..n {
                    acc = acc + w[a][i].conj() * gram[(a, b)] * w[b][j];
                }
            }
            acc
        })
    }

    /// The detector operator restricted to the span, as an `r×r` Hermitian matrix.
    pub fn restrict(&self, states: &[PureState<T>], det: &DetectorModel<T>) -> Result<CMatrix<T>> {
        let k = self.restrict_gram(&gram_matrix(states, det)?);
        Ok(CMatrix::from_fn(k.dim(), |i, j| (k[(i, j)] + k[(j, i)].conj()).scale(T::lit(0.5))))
    }
}

/// Orthonormalizes `states` under the `kernel`-weighted inner product.
pub fn orthonormalize<T: Real>(states: &[PureState<T>], kernel: &DetectorModel<T>) -> Result<Orthonormalized<T>> {
    if states.is_empty() {
        return Err(Error::arg("nothing to orthonormalize"));
    }
    let g = gram_matrix(states, kernel)?;
    let eig = hermitian_eigen(&g);
    let largest = eig.values.last().copied().unwrap_or(T::zero());
    if !(largest > T::zero()) {
        return Err(Error::arg("states have zero weight under the kernel"));
    }
    let threshold = T::lit(RANK_THRESHOLD) * largest;
    let keep: Vec<usize> = (0..eig.values.len()).rev().filter(|&i| eig.values[i] > threshold).collect();
    let n = states.len();
    if keep.len() < n {
        log::debug!("orthonormalize: rank {} of {} states (cut {})", keep.len(), n, threshold);
    }
    let coeffs = (0..n)
        .map(|a| keep.iter().map(|&i| eig.vectors[(a, i)].conj().scale(eig.values[i].sqrt())).collect())
        .collect();
    let synthesis = (0..n)
        .map(|b| keep.iter().map(|&i| eig.vectors[(b, i)].unscale(eig.values[i].sqrt())).collect())
        .collect();
    Ok(Orthonormalized {
        rank: keep.len(),
        threshold,
        eigenvalues: keep.iter().map(|&i| eig.values[i]).collect(),
        coeffs,
        synthesis,
    })
}

/// A weighted ensemble of pure states.
#[derive(Clone, Debug, PartialEq)]
pub enum MixedState<T> {
    Pure(PureState<T>),
    Ensemble(Vec<(T, PureState<T>)>),
}

impl<T: Real> MixedState<T> {
    pub fn ensemble(components: Vec<(T, PureState<T>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::arg("empty ensemble"));
        }
        if components.iter().any(|(p, _)| !(*p >= T::zero())) {
            return Err(Error::arg("ensemble weights must be nonnegative"));
        }
        let total: T = components.iter().map(|c| c.0).sum();
        if (total - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::arg(format!("ensemble weights sum to {total}, expected 1")));
        }
        Ok(MixedState::Ensemble(components))
    }

    /// Average over a Gaussian-distributed parameter `x ~ N(mean, sd²)` by
    /// Gauss–Hermite quadrature; `build` maps a parameter value to a state.
    pub fn gaussian_parameter(
        mean: T,
        sd: T,
        nodes: usize,
        build: impl Fn(T) -> Result<PureState<T>>,
    ) -> Result<Self> {
        if sd < T::zero() {
            return Err(Error::arg("parameter spread must be nonnegative"));
        }
        if sd == T::zero() {
            return Ok(MixedState::Pure(build(mean)?));
        }
        let (x, w) = gauss_hermite::<T>(nodes);
        let sqrt_pi = T::PI().sqrt();
        let mut comps = Vec::with_capacity(nodes);
        for (xi, wi) in x.into_iter().zip(w) {
            if wi > T::zero() {
                comps.push((wi / sqrt_pi, build(mean + T::SQRT_2() * sd * xi)?));
            }
        }
        // Renormalize away the last-digit error of the rule.
        let total: T = comps.iter().map(|c| c.0).sum();
        for c in comps.iter_mut() {
            c.0 = c.0 / total;
        }
        Ok(MixedState::Ensemble(comps))
    }

    /// Gaussian photon whose arrival time fluctuates with standard deviation `sd`.
    pub fn arrival_jitter(base: GaussianState<T>, sd: T, nodes: usize) -> Result<Self> {
        Self::gaussian_parameter(base.t, sd, nodes, |t| Ok(PureState::Gaussian(GaussianState { t, ..base })))
    }

    pub fn components(&self) -> Vec<(T, &PureState<T>)> {
        match self {
            MixedState::Pure(s) => vec![(T::one(), s)],
            MixedState::Ensemble(c) => c.iter().map(|(p, s)| (*p, s)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            MixedState::Pure(_) => 1,
            MixedState::Ensemble(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T> From<PureState<T>> for MixedState<T> {
    fn from(s: PureState<T>) -> Self {
        MixedState::Pure(s)
    }
}

/// `T[i][j] = p_a,i ⟨φ_a,i|Γ|φ_b,j⟩`, the transfer matrix whose cyclic
/// products give traces `Tr{Γ ρ_a Γ ρ_b …}`.
pub fn transfer_matrix<T: Real>(a: &MixedState<T>, det: &DetectorModel<T>, b: &MixedState<T>) -> Result<Vec<Vec<Complex<T>>>> {
    let ca = a.components();
    let cb = b.components();
    ca.iter()
        .map(|(p, sa)| cb.iter().map(|(_, sb)| Ok(overlap(sa, det, sb)?.scale(*p))).collect())
        .collect()
}

pub(crate) fn mat_mul_rect<T: Real>(x: &[Vec<Complex<T>>], y: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
    let cols = y.first().map_or(0, |r| r.len());
    x.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(y).fold(Complex::zero(), |acc, (a, yr)| acc + *a * yr[j]))
                .collect()
        })
        .collect()
}

pub(crate) fn trace_rect<T: Real>(x: &[Vec<Complex<T>>]) -> Complex<T> {
    (0..x.len()).fold(Complex::zero(), |acc, i| acc + x[i][i])
}

/// `g_k = Tr{(√Γ ρ √Γ)^k} = Tr{(Γρ)^k}`.
pub fn gk_trace<T: Real>(rho: &MixedState<T>, det: &DetectorModel<T>, k: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::arg("g_k needs k >= 1"));
    }
    let t = transfer_matrix(rho, det, rho)?;
    let mut power = t.clone();
    for _ in 1..k {
        power = mat_mul_rect(&power, &t);
    }
    Ok(trace_rect(&power).re)
}

/// Result of increasing a quadrature order until two successive orders agree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Converged<T> {
    pub value: T,
    pub nodes: usize,
    pub drift: T,
    pub converged: bool,
}

/// Evaluates `f(n)` for `n = start, 2·start, …` until the relative drift
/// between successive orders is below `tol` or `max_nodes` is reached.
pub fn converge_nodes<T: Real>(
    mut f: impl FnMut(usize) -> Result<T>,
    start: usize,
    tol: f64,
    max_nodes: usize,
) -> Result<Converged<T>> {
    let mut nodes = start.max(1);
    let mut prev = f(nodes)?;
    loop {
        let next_nodes = nodes * 2;
        let next = f(next_nodes)?;
        let drift = (next - prev).abs() / next.abs().max(T::min_positive_value());
        if drift < T::lit(tol) || next_nodes >= max_nodes {
            return Ok(Converged { value: next, nodes: next_nodes, drift, converged: drift < T::lit(tol) });
        }
        nodes = next_nodes;
        prev = next;
    }
}
