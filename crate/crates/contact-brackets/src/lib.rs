//! Covariant brackets on spaces of solutions via contact geometry.
//!
//! The crate builds contact structures from Hamiltonian data, evaluates
//! Jacobi brackets and the Poisson subalgebra of dynamical invariants,
//! solves the discrete action principle as a boundary value problem, and
//! verifies the underlying geometric identities numerically — for
//! non-relativistic systems on the extended phase space (u, p, s) and for
//! the relativistic particle on the positive mass shell.
//!
//! Entry points:
//!
//! - [`expr`]: the expression language (parse, differentiate, evaluate).
//! - [`contact`]: contact structures, Reeb fields, Jacobi brackets.
//! - [`extended`]: non-relativistic models, flows, Darboux coordinates,
//!   level-set Poisson brackets.
//! - [`variational`]: the discrete action, Euler–Lagrange residuals,
//!   boundary terms, the Newton solver and the solution-space 2-form.
//! - [`mass_shell`]: the relativistic particle, its contact data, the
//!   Poincaré algebra and Newton–Wigner coordinates.
//! - [`verify`]: seeded residual suites over all of the above.
//!
//! The `contact-brackets` binary exposes the same functionality as a small
//! CLI (`simulate`, `bracket`, `verify`, `solve-bvp`, `darboux`); the
//! crate-level `examples/` directory walks through each capability.

// `!(x > 0.0)` is used for preconditions on purpose: it rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod config;
pub mod contact;
pub mod error;
pub mod expr;
pub mod extended;
pub mod forms;
pub mod mass_shell;
pub mod report;
pub mod sample;
pub mod variational;
pub mod verify;

pub use chart::{Chart, ChartPoint};
pub use error::{Error, Result};
pub use expr::Expression;
