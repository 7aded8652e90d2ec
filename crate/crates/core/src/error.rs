use thiserror::Error;

use crate::chain::ChainError;
use crate::game::GameError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("{what} did not terminate within {cap} iterations")]
    IterationCap { what: &'static str, cap: usize },
    #[error("a closed class lies inside the free states (critical set is wrong)")]
    ClosedFreeClass,
    #[error("vector is not super-harmonic: excess {excess:e}")]
    NotSuperHarmonic { excess: f64 },
    #[error("vector is not harmonic: defect {defect:e}")]
    NotHarmonic { defect: f64 },
    #[error("no convergence within {cap} outer iterations (best residual {residual:e})")]
    OuterCap { cap: usize, residual: f64, eta: Vec<f64>, v: Vec<f64> },
    #[error("injected bias at iteration {iteration} is invalid: {reason}")]
    BadInjection { iteration: usize, reason: String },
}
