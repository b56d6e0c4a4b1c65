//! Numerics for the nonlocal-dispersal Fisher-KPP equation
//!
//! ```text
//! u_t = ∫_D κ(y-x) u(t,y) dy + u f(t,x,u),    f(t,x,u) = a(t,x) - b(t,x) u
//! ```
//!
//! with coefficients that are finite trigonometric polynomials in time (and
//! space), on a bounded box (exterior-zero truncation) or on a torus standing
//! in for the whole space.
//!
//! The crate is `no_std` and only needs `alloc`. It is organised as:
//!
//! * [`domain`] and [`kernel`]: uniform grids, sampled dispersal kernels and the
//!   dispersal operator `K`.
//! * [`almost_periodic`]: trigonometric-polynomial coefficients, Bohr means,
//!   Bohr-Fourier coefficients, translation numbers and frequency modules.
//! * [`evolution`]: RK4 time stepping of the nonlinear equation and of its
//!   linearization at zero, plus super/sub-solution and ordering checks.
//! * [`spectral`]: top Lyapunov exponents, static principal eigenvalues,
//!   lower bounds and test-function certificates.
//! * [`dynamics`]: part metric, pullback construction of the positive entire
//!   solution and the uniqueness/stability/extinction experiments.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod almost_periodic;
pub mod domain;
pub mod dynamics;
pub mod evolution;
mod error;
mod fft;
pub mod kernel;
mod math;
pub mod spectral;

pub use almost_periodic::{ApCoefficient, SpatialMode, SpatialProfile, TemporalMode, TimeSeries};
pub use domain::{Domain, DomainKind};
pub use error::{Error, Result};
pub use evolution::{BoundaryShift, Field, Model, Reaction, SolveOptions, Trajectory};
pub use kernel::{Dispersal, Kernel, KernelFamily, KernelOptions};
