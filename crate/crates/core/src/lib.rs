//! Stochastic series expansion quantum Monte Carlo for non-Hermitian
//! quantum spin chains, with worldline-winding diagnostics, directed-loop
//! ergodicity telemetry, and exact cross-checks (sector ED with boundary
//! flux, biorthogonal free fermions, spectral winding invariants, and
//! correlation-matrix Renyi entropies).

pub mod error;
pub mod exact;
pub mod model;
pub mod sse;
pub mod winding;

pub use error::{Error, Result};
