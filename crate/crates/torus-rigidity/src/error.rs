//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Geodesic balls are only isometric to Euclidean balls strictly inside
    /// the injectivity radius; charts are capped at radius 1/4.
    #[error("chart radius {0} exceeds the maximum 0.25")]
    ChartTooLarge(f64),

    #[error("point at distance {dist} lies outside chart of radius {radius}")]
    OutsideChart { dist: f64, radius: f64 },

    /// Evaluation requested at (or within 1e-9 of) a point where the
    /// function family has no gradient: cut loci, sawtooth kinks, argmax ties.
    #[error("gradient requested at a non-differentiable point")]
    NonDifferentiablePoint,

    #[error("evaluation budget exceeded: {needed} > {budget}; {hint}")]
    BudgetExceeded {
        needed: u128,
        budget: u128,
        hint: String,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
