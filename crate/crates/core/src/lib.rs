//! Differential analysis of privileged-account risks in MiniSol contracts.

pub mod analyzer;
pub mod cli;
pub mod engine;
pub mod financial;
pub mod frontend;
pub mod graphs;
pub mod oracle;
pub mod report;
pub mod summary;
