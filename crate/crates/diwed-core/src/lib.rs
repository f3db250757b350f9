//! Numerical toolkit for device-independent entanglement-depth bounds from
//! two-body permutationally invariant Bell expressions.
//!
//! The toolkit computes, for a Bell expression `I` built from symmetric one-
//! and two-body correlators, the bound `β_k` that `I` satisfies on every
//! state in which at most `k` particles are genuinely entangled together
//! (`k`-producible states). Two complementary engines bracket `β_k`:
//!
//! - [`seesaw`] — an alternating variational minimization over measurement
//!   angles and per-group states, giving an upper bound `β_k^U`;
//! - [`certificate`] — a semidefinite relaxation of the marginal problem with
//!   positivity of partial transposes, giving a safe lower bound `β_k^L`.
//!
//! Supporting modules: [`inequality`] (expressions, classical bounds, solution
//! counting), [`partitions`] (grouping combinatorics), [`qops`] (observables,
//! Bell operators, Dicke-sector reductions), [`sdp`] (a self-contained dense
//! interior-point solver), [`symmetric`] (large-`n` models and asymptotics),
//! and [`witness`] (conversion to collective-spin witnesses).

pub mod certificate;
pub mod inequality;
mod linalg;
pub mod partitions;
pub mod qops;
pub mod sdp;
pub mod seesaw;
pub mod symmetric;
pub mod witness;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid inequality: {0}")]
    InvalidInequality(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("dimension budget exceeded: {0}")]
    DimensionBudget(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("SDP reported infeasible problem")]
    SdpInfeasible,
}

pub type Result<T> = std::result::Result<T, Error>;
