//! Single-snapshot MUSIC spectral estimation on the torus.
//!
//! The crate is organised bottom-up:
//!
//! - [`signal_model`]: frequency/amplitude models, sample synthesis, seeded
//!   complex Gaussian noise and torus metrics.
//! - [`hankel_subspace`]: Hankel and Vandermonde matrices, the SVD split into
//!   signal and noise subspaces, model-order estimation.
//! - [`music`]: noise-space correlation `R(ω)`, imaging function `J(ω)`, grid
//!   scan with golden-section refinement, amplitude recovery and the
//!   curvature of `R²`.
//! - [`bounds`]: explicit singular-value bounds for Vandermonde matrices with
//!   nodes on the unit circle, perturbation bounds for `R`, and brute-force
//!   oracles.
//! - [`experiments`]: Monte Carlo harness for accuracy sweeps and
//!   super-resolution phase transitions, with CSV/JSON/SVG reports.
//! - [`cli`]: the `music` command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod hankel_subspace;
pub mod linalg;
pub mod music;
pub mod signal_model;

pub use error::{Error, Result};
pub use num_complex::Complex64;
