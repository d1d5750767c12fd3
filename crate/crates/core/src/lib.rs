//! Exact output statistics of linear-optical networks fed with partially
//! distinguishable photons and read out by imperfect detectors.
//!
//! The central object is the partial-indistinguishability matrix `J(σ₁, σ₂)`,
//! indexed by pairs of permutations of the photons. Output probabilities are
//! quadratic forms of `J` in the path amplitudes of the network, and several
//! independent engines (J-matrix, permanents of Hadamard products, a Fock-space
//! expansion) compute the same numbers by different routes.
//!
//! Numerical code is generic over the real scalar type through [`Real`];
//! the `*64` aliases below fix it to `f64`, which is what the CLI uses.

// `!(x >= lo)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bosonsampling;
pub mod error;
pub mod io;
pub mod jmatrix;
pub mod linalg;
pub mod matrix;
pub mod network;
pub mod permanent;
pub mod probability;
mod scalar;
pub mod spectral;
pub mod symgroup;
pub mod zeroprob;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type CMatrix64 = matrix::CMatrix<f64>;
pub type Network64 = network::NetworkMatrix<f64>;
pub type GaussianState64 = spectral::GaussianState<f64>;
pub type PureState64 = spectral::PureState<f64>;
pub type MixedState64 = spectral::MixedState<f64>;
pub type Detector64 = spectral::DetectorModel<f64>;
pub type JMatrix64 = jmatrix::JMatrix<f64>;
pub type BSParams64 = bosonsampling::BSParams<f64>;
pub type ProbabilityResult64 = probability::ProbabilityResult<f64>;
