//! Bit-interleaved coded multiple beamforming with limited-rate feedback.
//!
//! The crate covers the whole link: codebook selection criteria and Lloyd
//! training on matrices with orthonormal columns, the (133,171) convolutional
//! code with spatial bit interleaving and Gray-mapped 16-QAM, linear receivers
//! with their soft bit metrics, and a deterministic Monte-Carlo BER harness.

pub mod bicm;
pub mod codebook;
pub mod error;
pub mod linalg;
pub mod quantizer;
pub mod random;
pub mod receivers;
pub mod sim;
pub mod trainer;

pub use codebook::Codebook;
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, PhaseVector, SvdTriple};
