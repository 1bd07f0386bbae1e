//! Hamiltonian formalism for delay ordinary differential equations.
//!
//! The crate is organised bottom-up: [`expr`] is a small expression engine
//! over the delay jet space, [`model`] holds the structured Lagrangians and
//! Hamiltonians, [`legendre`] maps between them, [`noether`] checks invariance
//! and builds first integrals, [`solver`] integrates the advance-delay
//! equations by the method of steps, and [`recursion`] is the integration-free
//! solver driven by first integrals. [`cli`] backs the `dham` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod model;
pub mod legendre;
pub mod classical;
pub mod noether;
pub mod solver;
pub mod recursion;
pub mod random;
pub mod cli;
