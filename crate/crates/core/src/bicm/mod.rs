//! Coded-modulation chain: (133,171) convolutional code, spatial bit
//! interleaver, Gray-mapped 16-QAM and soft-input Viterbi decoding.

pub mod code;
pub mod interleaver;
pub mod metrics;
pub mod qam;
pub mod viterbi;

pub use code::{conv_encode, CodeSpec};
pub use interleaver::InterleaverMap;
pub use metrics::BitMetricTable;
pub use qam::Qam16;
pub use viterbi::viterbi_decode;
