//! Tensor-network analysis of convolutional arithmetic circuits.
//!
//! The crate builds the tensor network of shallow and deep ConvACs, evaluates
//! them, measures the entanglement of matricized weights tensors, and bounds
//! the achievable matricization ranks with multiplicative min-cuts on the
//! network's graph.

pub mod advise;
pub mod cli;
pub mod convac;
pub mod error;
pub mod graph;
pub mod network;
pub mod partition;
pub mod simulation;
pub mod spectrum;
pub mod tensor;

pub use error::{Error, Result};
