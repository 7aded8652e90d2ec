//! Brute-force references for the solvers.
//!
//! These share only the operator and the fixed-pair chain solver with the
//! policy iteration code, never its improvement logic.

use rayon::prelude::*;
use thiserror::Error;

use crate::chain::{mean_payoff_fixed_pair, strongly_connected_components, ChainError, Digraph, LinearOptions};
use crate::critical::{CriticalResult, RowFamily};
use crate::game::Game;
use crate::shapley::apply;
use crate::sparse::SparseMatrix;

/// Default bound on the number of enumerated strategy pairs or selections.
pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration of {count} cases exceeds the cap {cap}")]
    Cap { count: u64, cap: u64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// `f^T(0) / T`.
pub fn value_iteration_slope(game: &Game, t: usize) -> Vec<f64> {
    assert!(t >= 1, "at least one iteration");
    let mut x = vec![0.0; game.n_states()];
    for _ in 0..t {
        x = apply(game, &x);
    }
    x.iter().map(|v| v / t as f64).collect()
}

/// Mixed-radix enumeration of all index tuples below `sizes`.
fn tuples(sizes: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let mut cur = Some(vec![0; sizes.len()]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut k = 0;
        loop {
            if k == sizes.len() {
                cur = None;
                break;
            }
            next[k] += 1;
            if next[k] < sizes[k] {
                cur = Some(next);
                break;
            }
            next[k] = 0;
            k += 1;
        }
        Some(out)
    })
}

fn product(sizes: impl Iterator<Item = usize>) -> u64 {
    sizes.fold(1u64, |p, s| p.saturating_mul(s as u64))
}

/// The value `min_sigma max_delta J` by exhaustive enumeration of pure strategies.
pub fn brute_force_value(game: &Game, cap: u64) -> Result<Vec<f64>, OracleError> {
    let n = game.n_states();
    let min_sizes: Vec<usize> = (0..n).map(|i| game.n_min_actions(i)).collect();
    let count = tuples(&min_sizes).fold(0u64, |c, s| c.saturating_add(product((0..n).map(|i| game.n_max_actions(i, s[i])))));
    if count > cap {
        return Err(OracleError::Cap { count, cap });
    }
    let opts = LinearOptions::default();
    let sigmas: Vec<Vec<usize>> = tuples(&min_sizes).collect();
    let per_sigma: Vec<Result<Vec<f64>, ChainError>> = sigmas
        .par_iter()
        .map(|sigma| {
            let max_sizes: Vec<usize> = (0..n).map(|i| game.n_max_actions(i, sigma[i])).collect();
            let mut best = vec![f64::NEG_INFINITY; n];
            for delta in tuples(&max_sizes) {
                let p = SparseMatrix::from_rows((0..n).map(|i| game.transition(i, sigma[i], delta[i]).iter()));
                let r: Vec<f64> = (0..n).map(|i| game.reward(i, sigma[i], delta[i])).collect();
                let eta = mean_payoff_fixed_pair(&p, &r, &opts)?;
                best.iter_mut().zip(&eta).for_each(|(b, e)| *b = b.max(*e));
            }
            Ok(best)
        })
        .collect();
    let mut value = vec![f64::INFINITY; n];
    for best in per_sigma {
        value.iter_mut().zip(&best?).for_each(|(v, b)| *v = v.min(*b));
    }
    Ok(value)
}

/// Supports of the averages of all nonempty subsets of the rows at one state.
fn subset_supports(family: &RowFamily, i: usize) -> Vec<Vec<usize>> {
    let rows: Vec<Vec<usize>> = family.members(i).map(|r| r.cols().collect()).collect();
    let mut out: Vec<Vec<usize>> = (1u32..1 << rows.len())
        .map(|mask| {
            let mut s: Vec<usize> = (0..rows.len()).filter(|k| mask >> k & 1 == 1).flat_map(|k| rows[k].iter().copied()).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// The critical graph as the union of the final graphs of all matrices whose
/// rows average nonempty subsets of the family.
///
/// A state with an empty family has no row, so it and every class reaching it
/// are never final.
pub fn brute_force_critical(family: &RowFamily, cap: u64) -> Result<CriticalResult, OracleError> {
    let n = family.n();
    let live: Vec<usize> = (0..n).filter(|&i| !family.is_empty(i)).collect();
    let options: Vec<Vec<Vec<usize>>> = live.iter().map(|&i| subset_supports(family, i)).collect();
    let count = product(options.iter().map(|o| o.len()));
    if count > cap {
        return Err(OracleError::Cap { count, cap });
    }
    let sizes: Vec<usize> = options.iter().map(|o| o.len()).collect();
    let mut arcs = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for choice in tuples(&sizes) {
        for (k, &i) in live.iter().enumerate() {
            adj[i].clone_from(&options[k][choice[k]]);
        }
        let comps = strongly_connected_components(&Digraph::from_adjacency(adj.iter().map(|a| a.iter().copied())));
        let mut comp_of = vec![0; n];
        for (c, comp) in comps.iter().enumerate() {
            comp.iter().for_each(|&i| comp_of[i] = c);
        }
        for (c, comp) in comps.iter().enumerate() {
            let has_rows = comp.iter().all(|&i| !family.is_empty(i));
            let closed = comp.iter().all(|&i| adj[i].iter().all(|&j| comp_of[j] == c));
            if has_rows && closed {
                arcs.extend(comp.iter().flat_map(|&i| adj[i].iter().map(move |&j| (i, j))));
            }
        }
    }
    Ok(CriticalResult::from_arcs(n, arcs, 0))
}
