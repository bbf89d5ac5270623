//! Quantum Fourier transform in the computational basis, simulated.
//!
//! The crate builds the circuits that encode DFT coefficients as binary
//! fixed-point codes entangled with their index, together with the
//! fixed-point arithmetic, amplitude estimation and circulant-operator
//! applications they rely on, and checks them against classical oracles.

pub mod arith;
pub mod circuit;
pub mod circuits;
pub mod circulant;
pub mod error;
pub mod fixed;
pub mod oracle;
pub mod qftc;
pub mod reference;
pub mod sparse;
pub mod state;
pub mod tally;
pub mod verify;

pub use error::{QftcError, Result};
