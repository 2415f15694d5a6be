//! Symbolic execution over labeled states.

pub mod exec;
pub mod privileged;
pub mod solver;
pub mod state;
pub mod value;

pub use exec::{CallerContext, Engine, EngineError, EngineOptions, Inputs, Role};
pub use privileged::{identify_privileged, primary_privileged};
pub use state::{ExecState, LabeledState};
