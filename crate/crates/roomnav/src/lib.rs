//! Desk-scale object-goal navigation sandbox.
//!
//! A deterministic 2D grid simulator, a three-layer scene representation
//! (rooms, viewpoints, objects), room-based hierarchical exploration with a
//! pluggable semantic reasoner, and a benchmark harness with SR/SPL/SPT/AT
//! metrics.

pub mod config;
pub mod geom;
pub mod priors;
pub mod reason;
pub mod world;
