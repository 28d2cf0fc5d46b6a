//! Pseudospectral simulation and verification laboratory for the dissipative
//! nonlinear Schrödinger equation
//!
//! ```text
//! i ∂ₜu + Δu = λ |u|^α u,   Im λ < 0,   2/(N+2) < α < 2/N
//! ```
//!
//! The equation is integrated either directly (the *u-frame*) or after the
//! pseudo-conformal change of variables (the *v-frame*), where the infinite
//! time axis is compressed to `[0, 1/b)` at the cost of a singular
//! coefficient `(1 - bt)^{-(4-Nα)/2}` in front of the nonlinearity.
//!
//! Module map:
//!
//! * [`params`]: physical parameters and the exponent bookkeeping.
//! * [`field`]: periodic grids, complex fields, spectral derivatives and
//!   weighted norms, binary snapshots.
//! * [`solver`]: Strang splitting with exact nonlinear substeps.
//! * [`conformal`]: the pseudo-conformal map and norm bridge.
//! * [`asymptotics`]: profile extraction and the predicted asymptotic profile.
//! * [`diagnostics`]: rate fits, limit checks, a priori monitors, reports.

// `!(x > 0.0)` is the NaN-rejecting form throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod conformal;
pub mod diagnostics;
pub mod field;
pub mod params;
pub mod solver;

pub use num_complex::Complex64;

pub use asymptotics::ProfileData;
pub use field::{Field, Frame, Grid};
pub use params::{ExponentSet, PhysParams};
pub use solver::{SolverConfig, Trajectory};
