//! Two-time Kirkwood-Dirac quasiprobabilities (KDQ) for finite-dimensional
//! quantum systems under constant-Hamiltonian unitary evolution, together
//! with uncertainty-relation bounds on their time evolution, the crossing
//! times at which non-classicality criteria can first be met, and a two-qubit
//! controlled-unitary work-extraction scenario built on top of them.
//!
//! The crate is organized bottom-up:
//!
//! * [`linop`] — dense complex-Hermitian linear algebra (spectral
//!   decomposition, exact propagators, Heisenberg evolution, partial trace);
//! * [`kdq`] — KDQ and two-point-measurement statistics for projective
//!   observable pairs, with non-classicality flags;
//! * [`srbounds`] — the bound engine: eigenvalue interpolation, symmetric
//!   logarithmic derivative, expectation-value and derivative-refined bounds;
//! * [`qsltimes`] — minimal times at which the bounds reach negativity or an
//!   imaginary-part threshold;
//! * [`workext`] — the two-qubit work-extraction scenario and power reports;
//! * [`oracle`] — brute-force trajectories, saturation constructions and
//!   seeded random instances used as ground truth by the test suites;
//! * [`verify`] — the named property checks behind the `verify` CLI command.

pub mod error;
pub mod kdq;
pub mod linop;
pub mod oracle;
pub mod qsltimes;
pub mod srbounds;
pub mod verify;
pub mod workext;

pub use error::{Error, Result};
