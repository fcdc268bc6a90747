//! One-shot assisted coherence distillation.
//!
//! Exact evaluation of the assisted fidelity of distillation, the m-distillation norm,
//! the semidefinite relaxations over states with bounded diagonal, same-diagonal pure-state
//! decompositions for qubits and qutrits, and the coherence of assistance.

pub mod distill;
pub mod dnorm;
pub mod ensembles;
pub mod error;
pub mod hermat;
pub mod sdpsolve;

pub use error::{Error, Result};
