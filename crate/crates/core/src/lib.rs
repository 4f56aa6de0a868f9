//! Direction-of-arrival estimation for sparse linear arrays using
//! variable-window-size (VWS) spatial smoothing of the difference coarray.
//!
//! The processing chain is
//!
//! 1. [`geometry`]: sensor layouts (ULA, nested, super nested, minimum
//!    redundancy) and their difference coarrays.
//! 2. [`signal`]: far-field snapshot simulation and covariance estimation.
//! 3. [`coarray`]: redundancy averaging onto the contiguous coarray and
//!    VWS smoothing with shrinkage `a` (window `M = G - a`, `P = G + a`
//!    windows). `a = 0` is the classical fixed-window coarray smoothing.
//! 4. [`estimators`]: MUSIC grid search and root-MUSIC on the smoothed
//!    matrix.
//! 5. [`montecarlo`]: seeded, paired-trial RMSE sweeps.
//!
//! Angles are sines of the arrival angle, `theta = sin(phi)` in `[-1, 1)`.

pub mod coarray;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod montecarlo;
pub mod numerics;
pub mod rng;
pub mod signal;

pub use error::{DoaError, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
