//! Loop-pruning calculus for lattice paths: the pruning operator and its
//! decomposition, segment classes with tree and elementary-sequence codecs,
//! fiber factorization, cut-step and rod-point analysis, and a seeded Monte
//! Carlo harness for transient simple random walks.

pub mod error;
pub mod experiments;
pub mod lattice;
pub mod prune;
pub mod report;
pub mod rng;
pub mod segment;
pub mod sim;

pub use error::{Error, Result};
pub use lattice::{LoopFamily, Path, Point, SimpleLoop};
