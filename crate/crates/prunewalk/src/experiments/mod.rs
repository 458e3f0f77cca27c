//! Desk-scale empirical and deterministic checks built on the pruning
//! calculus: retained-step density, cut/rod densities, pruned local-time
//! tails, conditional segment law and stop probability, the insertion
//! strategy event, rod structure, and return-pattern combinatorics.

pub mod conditional;
pub mod density;
pub mod necessary;
pub mod pattern;
pub mod rod;
pub mod strategy;
