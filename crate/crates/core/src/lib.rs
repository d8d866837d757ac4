//! Minimal vectors and minimal functionals for powers of an operator on
//! finite-dimensional real normed spaces, together with the iteration that
//! extracts a candidate hyperinvariant subspace from them.
//!
//! The crate is organized bottom-up:
//!
//! - [`norm`]: the three classical norms on ℝⁿ, their duals and norming functionals.
//! - [`operator`]: dense operators with cached powers, operator norms and commutant sampling.
//! - [`lp`]: a dense two-phase simplex solver with Bland's rule and dual multipliers.
//! - [`minvec`]: the ball-constrained norm minimization and its dual certificate.
//! - [`iteration`]: the per-power trace, ratio subsequence, limit estimates and α decomposition.
//! - [`subspace`]: Krylov candidates for the subspace spanned by the commutant image of `Qw`.
//! - [`gallery`]: canonical operators and the compact-commutant setup.
//! - [`scenario`], [`report`]: the batch pipeline behind the `minvec` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod check;
pub mod error;
pub mod gallery;
pub mod iteration;
pub mod lp;
pub mod minvec;
pub mod norm;
pub mod operator;
pub mod plot;
pub mod report;
pub mod scenario;
pub(crate) mod serde_vec;
pub mod subspace;
pub mod tolerance;

pub use error::{Error, Result};
pub use minvec::{
    certificate_report, recertify, relax_to_lambda, solve, solve_l2, solve_polyhedral, CertificateReport,
    MinimalProblem, MinimalSolution,
};
pub use norm::{dual_norm, dual_pair, norm, norming_functional, Functional, NormKind, SpaceSpec};
pub use operator::{commutant_sample, operator_norm, quasinilpotence_profile, CommutantElement, OperatorHandle};
pub use tolerance::Tolerances;
