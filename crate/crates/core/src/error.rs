use thiserror::Error;

use crate::solver::SemiflowState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("t = {t} lies outside [{a}, {b}]")]
    OutOfDomain { t: f64, a: f64, b: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid function: {0}")]
    InvalidGrid(String),

    #[error("syntax error at line {line}, column {column}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("contraction window {window} is smaller than the grid step {h}")]
    WindowTooSmall { window: f64, h: f64 },

    #[error("no convergence after {iterations} iterations (ratio {ratio:.3e}){}", .window.map(|w| format!(" in window {w}")).unwrap_or_default())]
    NoConvergence {
        iterations: usize,
        ratio: f64,
        window: Option<usize>,
    },

    #[error("solution escaped at t = {reached} before the requested time {requested}")]
    EscapeBeforeT {
        reached: f64,
        requested: f64,
        partial: Box<SemiflowState>,
    },

    #[error("invalid problem: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
