//! Partitioning and closed-loop evaluation of non-centralized predictive
//! control for networks of dynamical systems.
//!
//! The crate builds graph views of a network, partitions them with exact and
//! heuristic engines, compiles multi-layer hybrid couplings into
//! mixed-logical-dynamical constraints, and scores partitions by simulating
//! centralized and ADMM-coordinated distributed MPC in closed loop.

// index loops over several parallel arrays read better than zipped iterators
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod evaluate;
pub mod exec;
pub mod generators;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod mpc;
pub mod partition;
pub mod qp;
pub mod topology;

pub use error::{Error, Result};
