//! Short-time quantum dynamics from convergent cluster expansions.
//!
//! Given a local Hamiltonian `H = Σ_X λ_X h_X` on `n` qudits and a product
//! state `ρ`, this crate computes
//!
//! * expectation values `⟨A(t)⟩ = tr(e^{iHt} A e^{-iHt} ρ)` of local observables,
//!   inside the convergence radius `t*` and, by analytic continuation, at any
//!   real time ([`obs_dynamics`]);
//! * the logarithm of the (generalized) Loschmidt echo
//!   `log tr(Π_l e^{-iH⁽ˡ⁾t_l} ρ)` for `|t| < t*_L` ([`loschmidt`]);
//! * closed-form certificates and their physical corollaries: concentration
//!   bounds, a quantum speed limit, and analyticity windows for dynamical
//!   phase transitions ([`bounds`]).
//!
//! Every expansion result is an [`Estimate`] carrying a rigorous truncation
//! bound. The [`oracle`] module holds exact dense references used to verify
//! those bounds at desk scale.

pub mod bounds;
pub mod clusters;
mod error;
pub mod fixtures;
pub mod format;
pub mod graphs;
pub mod linalg;
pub mod loschmidt;
pub mod model;
pub mod obs_dynamics;
mod ops;
mod wordsums;
pub mod oracle;

pub use error::{Error, ErrorKind, Result};

pub use bounds::{ConcentrationReport, ConcentrationVariant, QslReport, Thresholds};
pub use clusters::{Cluster, Partition};
pub use graphs::{InteractionGraph, SimpleGraph};
pub use linalg::{CMatrix, Complex64};
pub use loschmidt::{LogEchoSeries, MultiEchoSpec};
pub use model::{DenseOperator, LocalHamiltonian, Observable, ProductState, Term};
pub use obs_dynamics::{CoefficientSource, CommutatorMethod, ContinuationPlan, Estimate};
pub use oracle::DenseSystem;

/// Resource limits shared by the expansion engines.
#[derive(Clone, Debug, PartialEq)]
pub struct Caps {
    /// Largest cluster that may be split into connected partitions.
    pub max_partition_size: usize,
    /// Largest graph handed to the Tutte evaluator.
    pub max_tutte_vertices: usize,
    /// Largest cluster evaluated by an `m!`-term permutation sum.
    pub max_naive_size: usize,
    /// Largest full Hilbert-space dimension the dense oracle will build.
    pub max_dense_dim: usize,
    /// Largest Taylor order an analytic-continuation plan may request.
    pub max_continuation_order: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_partition_size: 14,
            max_tutte_vertices: 24,
            max_naive_size: 7,
            max_dense_dim: 4096,
            max_continuation_order: 200_000,
        }
    }
}
