//! Adiabatic elimination for quantum stochastic models with a coupling
//! strength `k`.
//!
//! A [`ScaledModel`] holds the `k`-independent pieces of a family of
//! Hudson–Parthasarathy coefficient triples
//! `K(k) = k²Y + kA + B`, `L_i(k) = kF_i + G_i`, `S_ij(k) = W_ij`.
//! [`eliminate()`] splits the system space into the kernel of `Y` (ground
//! states) and its complement, checks the structural identities that make
//! the elimination valid, and returns the limiting coefficients on the
//! ground space. The [`semigroup`] module then measures how fast the
//! finite-`k` dynamics approach the limit, through the vacuum and
//! coherent-state distances of the reduced (skew) semigroups.
//!
//! Everything is dense and finite dimensional; superoperators act on
//! column-stacked operators (see [`linalg::vec_op`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod eliminate;
mod error;
pub mod linalg;
pub mod model;
pub mod semigroup;

pub use eliminate::{
    check_assumption3, check_assumption4, decompose, decompose_with_inverse, displace_limit,
    displace_scaled, eliminate, eliminate_with, Amplitude, Decomposition, EliminationResult,
};
pub use error::{Error, Result};
pub use linalg::{
    assemble_superoperator, expm, kernel_projector, op_distance, restricted_inverse, Operator,
    Projector, Superoperator,
};
pub use model::{
    check_hp_unitarity, check_limit_unitarity, check_scaling_consistency, instantiate, CheckReport,
    CoefficientSet, ScaledModel,
};
pub use num_complex::Complex64;
pub use semigroup::{
    build_generators, coherent_distance, evolve, generator_convergence_check, k_sweep,
    kurtz_corrector, vacuum_distance, ConvergenceReport, GeneratorPair, StepDrive,
};

/// Default relative threshold for the numerical kernel and restricted inverse.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Default residual tolerance for every identity checker (before norm scaling).
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;
