//! Numerical conformal mapping of bounded multiply connected domains onto
//! circular and radial slit disks, and the domain functionals attached to
//! those maps.
//!
//! A bounded domain `G` of connectivity `ell + 1` with boundary components
//! `Γ_0, ..., Γ_ell` is mapped onto the unit disk with `ell` concentric
//! circular slits, radial slits, or any mixture of the two, the map `Φ`
//! being normalized by `Φ(α) = 0` and `Φ'(α) > 0`. The reduced modulus of
//! the slit disk yields the generalized reduced modulus `m(G, α)` and the
//! associated radius `R(G, α) = exp(2π m(G, α))`, which generalizes the
//! conformal radius to multiply connected domains.
//!
//! The map is computed from a boundary integral equation with the
//! generalized Neumann kernel, discretized by the Nyström method with the
//! trapezoidal rule on smooth boundaries and a graded mesh at corners.
//!
//! Modules:
//! - [`geometry`]: boundary parametrizations, domain assembly, the open-up
//!   map for slit domains.
//! - [`kernel`]: the generalized Neumann kernel and its companion, dense
//!   and structured (FFT / multipole) operator backends.
//! - [`solver`]: dense and GMRES solvers for the integral equation.
//! - [`mityuk`]: the end-to-end pipeline producing `R(G, α)`, `m(G, α)`,
//!   slit parameters, and boundary values of the map.
//! - [`analysis`]: grid sweeps of `α ↦ R(G, α)`, critical point detection,
//!   boundary limit probes, and the lower bound check.
//! - [`oracles`]: closed-form values for disks and annuli used to validate
//!   the solver.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod mityuk;
pub mod oracles;
pub mod solver;

pub use error::Error;

/// Alias used throughout: the crate works in double precision.
pub type C64 = num_complex::Complex64;

/// Result alias with the crate error type.
pub type Result<T> = std::result::Result<T, Error>;
