//! Indirect methods for autonomous optimal control.
//!
//! The crate computes Pontryagin extremals by single shooting, machine-checks
//! the defining conditions (control and adjoint systems, pointwise
//! maximality) along a candidate trajectory, and checks a property those
//! conditions imply for autonomous problems: the Hamiltonian is constant in
//! time along every extremal.
//!
//! The constancy check comes with an independent certificate.  Any
//! autonomous problem can be lifted into a time-augmented problem with one
//! extra state (rescaled time) and one extra control (the reparametrization
//! speed).  Along a lifted extremal the new costate must equal the original
//! Hamiltonian and must be constant, because the augmented Hamiltonian does
//! not depend on the new state.  [`augment`] builds the lifted problem and
//! trajectory mechanically and verifies both facts numerically.
//!
//! Module map:
//! - [`expr`]: a tiny expression language for cost densities and vector
//!   fields, with forward-mode differentiation.
//! - [`model`]: problem and extremal data types, Hamiltonian evaluation.
//! - [`numerics`]: pointwise Hamiltonian maximization, RK4 / adaptive RK45
//!   propagation, damped-Newton shooting.
//! - [`verify`]: residual checks on a trajectory grid with a per-condition
//!   report.
//! - [`augment`]: the time-augmentation lift and its verification.
//! - [`catalog`]: benchmark problems with closed-form solutions.
//! - [`interp`]: monotone cubic and piecewise-constant interpolation.
//! - [`cli`]: the command-line front end and file formats.

pub mod augment;
pub mod catalog;
pub mod cli;
pub mod expr;
pub mod interp;
pub mod model;
pub mod numerics;
pub mod verify;

pub use expr::ExprTree;
pub use model::{ControlProblem, ControlRegion, Extremal};
pub use numerics::{maximize_hamiltonian, shoot, IntegratorConfig, ShootingConfig};
pub use verify::{verify_extremal, VerificationReport};
