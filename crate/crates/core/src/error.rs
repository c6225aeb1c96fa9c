use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One offending item reported by a validation pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Index of the offending event (or other item) in its container.
    pub index: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}: {}", self.index, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice sum did not converge after {doublings} cutoff doublings (last relative change {last_change:e})")]
    ConvergenceFailure { doublings: usize, last_change: f64 },

    #[error("system has {requested} spins, the cap is {cap}")]
    SizeCap { requested: usize, cap: usize },

    #[error("duplicate chain position at index {0}")]
    DuplicatePosition(usize),

    #[error("validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("events {0} and {1} overlap in time")]
    Overlap(usize, usize),

    #[error("time step underflow: {0}")]
    StepUnderflow(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point ({:e}, {:e}, {:e}) lies inside the magnet", .0[0], .0[1], .0[2])]
    InteriorPoint([f64; 3]),

    #[error("no root in bracket [{lo:e}, {hi:e}]: {detail}")]
    BracketFailure { lo: f64, hi: f64, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("schedule i/o: {0}")]
    Io(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
