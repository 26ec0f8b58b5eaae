//! Online distributed ADMM over a communication graph, with social regret
//! against a hindsight comparator and a formation-acquisition benchmark.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod numerics;
pub mod problem;
pub mod regret;
pub mod solver;

pub use error::{Error, Result};
