//! Intrinsic quantum Cramér–Rao bounds for SU(n) channels.
//!
//! When all parameters of an SU(n) transformation are estimated and the
//! parameter variances are weighted by the Cartan metric of the group, the
//! scalar Cramér–Rao bound loses every trace of the chosen coordinates:
//!
//! ```text
//! Tr[g C(θ̂)] ≥ ¼ Tr[C_ψ⁻¹(X)],
//! ```
//!
//! where `C_ψ(X)` is the symmetrized covariance of the su(n) generators in
//! the probe state. This crate builds the pieces needed to evaluate and
//! certify that bound:
//!
//! - [`algebra`]: orthonormal Gell-Mann bases and structure constants.
//! - [`representation`]: bosonic symmetric representations on Fock sectors.
//! - [`channel`]: parametrizations, generator coefficients `𝗛(θ)`, metric.
//! - [`metrology`]: generator covariances (pure and mixed), QFIM, bounds.
//! - [`probes`]: GHZ/NOON, tetrahedral and SU(3) cyclic probes, optimizer.
//! - [`scan`]: GHZ-versus-floor sweeps over particle number.
//!
//! Batch workloads go through [`exec::Execution`], which uses rayon when the
//! `parallel` feature is enabled.

// `!(x <= limit)` is used deliberately so that NaN counts as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod channel;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod metrology;
pub mod probes;
pub mod quadrature;
pub mod representation;
pub mod scan;

pub use algebra::{gellmann_basis, structure_constants, GeneratorBasis, StructureConstants};
pub use channel::{Channel, GeneratorMatrix, Parametrization, SingularityReport};
pub use error::{Error, Result};
pub use exec::Execution;
pub use metrology::{BoundReport, InverseMode, ProbeState, Weight};
pub use probes::{OptimizerConfig, ProbeSpec};
pub use representation::{symmetric_representation, Representation};
