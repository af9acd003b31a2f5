//! Quantum process matrices for Rydberg-blockade gates.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense complex matrices over tensor-product spaces.
//! * [`process`]: process matrices (χ), their concatenation and comparison.
//! * [`mcwf`]: Monte Carlo wave-function trajectories and χ extraction.
//! * [`rydberg`]: the neutral-atom register model and pulse sequences.
//! * [`circuit`]: circuits, the Toffoli decomposition and implementation comparisons.

pub mod circuit;
pub mod mcwf;
pub mod process;
pub mod rydberg;
pub mod tensor;

pub use num_complex::Complex64 as C64;
