//! Simulation, trap design and bound analysis for verified delegation of
//! Clifford computations with magic-state injection.
//!
//! The crate is layered bottom-up:
//!
//! * [`pauli`], [`clifford`]: exact Pauli and Clifford algebra.
//! * [`stabilizer`], [`dense`]: the two simulation backends.
//! * [`protocol`]: client and server state machines for blind injection,
//!   blind measurement and their compositions, plus exact validators.
//! * [`traps`]: trap construction, detection analysis and merging.
//! * [`verifier`]: interleaved test/computation rounds and Monte-Carlo runs.
//! * [`bounds`]: the analytic error bounds.

pub mod bounds;
pub mod clifford;
pub mod dense;
pub mod error;
pub mod pauli;
pub mod protocol;
pub mod rng;
pub mod stabilizer;
pub mod traps;
pub mod verifier;

pub use error::{Error, Result};
