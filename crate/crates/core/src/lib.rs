//! Operator splitting for non-autonomous linear evolution equations
//! `u'(t) = (A(t) + B(t)) u(t)`.
//!
//! Two backends share the same composition engines in [`splitting`]:
//!
//! * a finite-difference backend for `u_t = u_xx + V(x, t) u` on an interval
//!   with homogeneous Dirichlet data ([`grid`], Crank–Nicolson and exact
//!   sub-steps in [`propagators`]);
//! * a dense-matrix backend whose exact flows (`expm`, RK4 evolution oracle)
//!   serve as ground truth for convergence-rate checks.
//!
//! [`approximation`] couples splitting with nested-grid restriction and
//! interpolation, [`analysis`] measures errors and fits convergence orders,
//! and [`cli`] drives the experiments from the `nasplit` binary.

pub mod analysis;
pub mod approximation;
pub mod cli;
pub mod error;
pub mod grid;
pub mod propagators;
pub mod splitting;
pub mod tridiagonal;

pub use error::{Error, Result};
pub use grid::{
    assemble_laplacian, make_grid, sample_potential, Grid1D, InitialCondition, Potential, State,
};
pub use splitting::{SplitKind, SplitMode, SplitRun, SplitScheme, Storage, TimeSpan};
pub use tridiagonal::TridiagonalOperator;
