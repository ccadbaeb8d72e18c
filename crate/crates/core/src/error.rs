use thiserror::Error;

use crate::channel::ValidationReport;
use crate::solver::CapacityResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Parse(String),

    #[error("invalid channel:\n{0}")]
    InvalidChannel(ValidationReport),

    #[error("alphabet {name} must have at least one letter")]
    EmptyAlphabet { name: &'static str },

    #[error("{x_size}^{s_size} strategies exceeds the enumeration limit of 2^20")]
    StrategyOverflow { x_size: usize, s_size: usize },

    #[error("parameter {name} = {value} is outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("output kernel has {classes} closed communication classes; stationary distribution is not unique")]
    NonUniqueStationary { classes: usize },

    #[error("stationary solve residual {residual:e} exceeds 1e-10")]
    StationaryResidual { residual: f64 },

    #[error("channel is not connected: no output is reachable from every initial output")]
    NotConnected,

    #[error("a + b + eta = 0 makes the closed-form objective undefined")]
    DegenerateDenominator,

    #[error("grid would need {points:e} policy evaluations (limit 1e8)")]
    GridTooLarge { points: f64 },

    #[error("iteration limit reached with optimality gap {:e}", .0.gap)]
    IterationLimit(Box<CapacityResult>),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,
}
