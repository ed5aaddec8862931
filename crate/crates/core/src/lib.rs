//! Matrix Sturm–Liouville operators `l(y) = -(p y')' + q y` with a
//! distributional potential `q = Q'`.
//!
//! Everything is expressed through the quasi-derivatives
//! `D¹y = p y' - Q y` and the first-order system `w' = A(t; λ) w` for
//! `w = (y, D¹y)`, so `q` itself is never evaluated pointwise. A jump of `Q`
//! across a breakpoint is a delta interaction.
//!
//! Module map:
//!
//! - [`poly`]: piecewise polynomial matrix functions.
//! - [`coeffs`]: coefficient sets `(p⁻¹, Q)` and the block system matrix.
//! - [`propagator`]: fundamental matrices, inhomogeneous solves, trajectories.
//! - [`boundary`]: boundary triplet maps, canonical conditions, classification.
//! - [`green`]: Green matrices, resolvent kernels, Hilbert–Schmidt norms.
//! - [`spectral`]: characteristic determinant, real and complex eigenvalue search.
//! - [`convergence`]: ε-family experiments for norm-resolvent convergence.
//! - [`cli`]: config parsing and batch task runner behind the `distsl` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
#[cfg(feature = "cli")]
pub mod cli;
pub mod coeffs;
pub mod convergence;
mod error;
pub mod green;
pub mod linalg;
pub mod poly;
pub mod propagator;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};

pub use boundary::{CanonicalBC, ExtensionClass, ExtensionKind, LinearBC, Variant};
pub use coeffs::{CoefficientSet, ShinZettlMatrix};
pub use green::{GreenKernel, GreenMatrix, Grid};
pub use poly::PiecewiseMatrixPoly;
pub use propagator::{FundamentalSolution, Mesh, Trajectory};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
