//! Brute-force ground truth over small concrete domains.

pub mod concrete;
pub mod theorems;
pub mod traverse;

pub use concrete::{CValue, CallInput, ConcreteState, Interpreter, PRIVILEGED};
pub use theorems::{
    check_theorems, check_theorems_with, compare, Theorem, TheoremReport, Violation,
};
pub use traverse::{
    full_traverse, full_traverse_with, OracleConfig, OracleError, TraverseResult, Witness,
};
