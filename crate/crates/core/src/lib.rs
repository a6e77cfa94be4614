//! Failure explanation for simulation traces of cyber-physical models.
//!
//! Passing traces train a set of invariants; a failing trace is checked
//! against them and the resulting violations are grouped in time and mapped
//! onto the blocks of the model.

pub mod checker;
pub mod cluster;
pub mod correlation;
pub mod manifest;
pub mod miner;
pub mod pipeline;
pub mod plant;
pub mod stl;
pub mod trace;
