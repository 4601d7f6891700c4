//! Synchronization analysis for networks of coupled phase oscillators.

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod graph;
mod lp;
pub mod powerflow;
pub mod random;
pub mod sync;

pub use error::{Result, SyncError};
pub use graph::WeightedGraph;
