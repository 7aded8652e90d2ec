//! Policy iteration for zero-sum mean-payoff stochastic games with perfect
//! information, using spectral projections at degenerate iterations.

pub mod game;
pub mod sparse;
pub mod format;
pub mod shapley;
pub mod chain;
pub mod error;
pub mod one_player;
pub mod critical;
pub mod generators;
pub mod two_player;
pub mod oracles;
pub mod cli;
