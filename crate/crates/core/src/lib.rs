//! Numerical laboratory for the two-point Weyl law on model manifolds.
//!
//! Flat tori and the round 2-sphere have explicit spectra, so their spectral
//! functions can be summed exactly and compared against the universal Bessel
//! leading terms. The crate is organized bottom-up:
//!
//! - [`specfun`]: Bessel `J_ν` (integer and half-integer ν), Legendre
//!   polynomials and the radial Fourier kernels of balls and spheres.
//! - [`lattice`]: period lattices, dual enumeration, shell counts, the torus
//!   inverse exponential map and deck-group images.
//! - [`manifolds`]: eigenlevels and exact spectral / cluster kernels.
//! - [`projector`]: the Bessel leading term, remainders and scaling scans.
//! - [`smoothing`]: the frequency-mollified projector, evaluated both as a
//!   mode sum and as a sum over lattice images.
//! - [`randomwaves`]: seeded monochromatic random-wave ensembles.
//! - [`analysis`]: log-log fits, localized sums and integrals, and cluster
//!   sup scans.
//! - [`cli`]: the `weyl-lab` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod lattice;
pub mod manifolds;
pub mod projector;
pub mod quadrature;
pub mod randomwaves;
pub mod smoothing;
pub mod specfun;

pub use error::{Error, Result};
