//! Markov chain structure and the linear systems of a fixed strategy pair.

pub mod lu;
pub mod scc;
pub mod sor;
mod solve;

use thiserror::Error;

pub use self::scc::{strongly_connected_components, Digraph};
pub use self::solve::{
    mean_payoff_fixed_pair, solve_eta_v, solve_eta_v_with, solve_substochastic, solve_transient, stationary,
};
pub use self::sor::SorParams;

use crate::sparse::SparseMatrix;

/// Escaping mass below which a class counts as closed.
pub const FINAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid pinned set: {0}")]
    InvalidPins(String),
    #[error("singular system of size {size}")]
    Singular { size: usize },
    #[error("SOR did not converge on a block of size {size}")]
    NotConverged { size: usize },
    #[error("sparse factorization exceeded its fill budget")]
    FillBudget,
    #[error("block of size {size} is not transient")]
    NotTransient { size: usize },
}

/// Linear algebra backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Direct factorizations everywhere they fit the fill budget.
    Lu,
    /// SOR on large final classes, direct elsewhere.
    #[default]
    Sor,
}

/// How final classes are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FinalMethod {
    /// Stationary distribution on classes above the dense limit, bordered system below.
    #[default]
    Auto,
    /// Stationary distribution, then the pinned bias system.
    Stationary,
    /// Bordered system with the mean payoff as an extra unknown.
    Bordered,
}

/// Solver choice for a single system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    Sor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearOptions {
    pub backend: Backend,
    pub final_method: FinalMethod,
    pub sor: SorParams,
    /// Blocks up to this size use dense factorizations.
    pub dense_limit: usize,
    /// Sparse factorizations may store this many entries per input entry.
    pub fill_factor: usize,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            backend: Backend::Sor,
            final_method: FinalMethod::Auto,
            sor: SorParams::default(),
            dense_limit: 64,
            fill_factor: 30,
        }
    }
}

/// Classes of a chain in topological order: arcs only go from a class to
/// itself or to classes listed after it.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDecomposition {
    pub classes: Vec<Vec<usize>>,
    pub is_final: Vec<bool>,
    pub class_of: Vec<usize>,
}

impl ClassDecomposition {
    /// States listed class by class.
    pub fn permutation(&self) -> Vec<usize> {
        self.classes.iter().flatten().copied().collect()
    }

    pub fn final_classes(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.classes.iter().zip(&self.is_final).filter(|(_, &f)| f).map(|(c, _)| c)
    }

    /// The minimal state of each final class.
    pub fn min_pins(&self) -> Vec<usize> {
        self.final_classes().map(|c| c[0]).collect()
    }
}

/// Splits `p` into irreducible classes and flags the closed ones.
pub fn decompose(p: &SparseMatrix) -> ClassDecomposition {
    let mut classes = strongly_connected_components(&Digraph::support(p));
    classes.reverse();
    let mut class_of = vec![0; p.n()];
    for (c, states) in classes.iter().enumerate() {
        for &s in states {
            class_of[s] = c;
        }
    }
    let is_final = classes
        .iter()
        .enumerate()
        .map(|(c, states)| {
            states.iter().all(|&i| {
                let row = p.row(i);
                let inside: f64 = row.iter().filter(|&(j, _)| class_of[j] == c).map(|(_, x)| x).sum();
                row.sum() - inside <= FINAL_TOL && inside >= 1.0 - crate::game::ROW_SUM_TOL
            })
        })
        .collect();
    ClassDecomposition { classes, is_final, class_of }
}
