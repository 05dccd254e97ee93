//! Monte-Carlo BER harness.

pub mod compare;
pub mod config;
pub mod harness;
pub mod report;
pub mod rng;

pub use config::{CodebookSource, ReceiverKind, Selection, SimConfig, StopRule};
pub use harness::Simulation;
pub use report::BerPoint;
