//! Minimization of `f(D) = sum_g tr(W_g D A_g^-1 D')` over `p x p`
//! orthonormal matrices `D`, the estimation problem behind common principal
//! components.
//!
//! Six solvers share one interface ([`SolverKind::solve`]): four
//! majorization-minimization schemes (`mm1`..`mm4`), cyclic pairwise
//! rotations (`flury`), and a projected-gradient line search (`als`).
//! The [`oracle`] module carries solver-independent reference values.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature; `std` only adds wall-clock timing to [`SolverReport`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod solvers;

pub use error::{CpcError, Result, Violation};
pub use nalgebra::{DMatrix, DVector};
pub use problem::{OrthonormalMatrix, ProblemInstance};
pub use solvers::{check_convergence, AlsParams, SolverConfig, SolverKind, SolverReport, SpectralBounds};
