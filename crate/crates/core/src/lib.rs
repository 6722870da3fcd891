//! Delay differential equations `x'(t) = f(x(t), x(t - r))` with histories in
//! `W^{1,p}`: solutions by contraction windows, and first-order sensitivities
//! with respect to the history and the delay.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hist_space;
pub mod problem;
pub mod rhs;
pub mod sensitivity;
pub mod solver;

pub use error::{Error, Result};
pub use hist_space::{GridFunction, PNorm, VecNorm};
pub use rhs::{Builtin, RhsModel};
pub use sensitivity::{fd_check, propagate_sensitivity, SensitivityDirection};
pub use solver::{solve, SemiflowState, SolveConfig, SolveResult};
