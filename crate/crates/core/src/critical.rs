//! Critical graphs of convex one-player operators and the spectral projection.
//!
//! At a harmonic vector `u` of `g`, the optimal rows at each state form a
//! family. A state is critical when it lies in a closed class of some matrix
//! whose rows are convex combinations of optimal rows. The critical graph is
//! found by repeatedly peeling the final classes of the support graph. The
//! spectral projection maps a super-harmonic `u` to the unique harmonic vector
//! that agrees with `u` on the critical states.

use crate::chain::{strongly_connected_components, Digraph};
use crate::error::SolveError;
use crate::game::{MaxStrategy, OnePlayerBuilder, OnePlayerGame};
use crate::one_player::{howard_stopped, InnerOptions, StoppedProblem};
use crate::shapley::sup_dist;
use crate::sparse::{Row, RowStore};

/// Mass below which an entry leaving the remaining states is ignored.
const MASS_TOL: f64 = 1e-12;

/// For each state, a finite set of stochastic rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RowFamily {
    start: Vec<usize>,
    rows: RowStore,
}

impl RowFamily {
    pub fn from_lists(lists: &[Vec<Vec<(usize, f64)>>]) -> Self {
        let mut start = vec![0];
        let mut rows = RowStore::new();
        for members in lists {
            for m in members {
                rows.push_row(m.iter().copied().filter(|&(_, p)| p != 0.0));
            }
            start.push(rows.len());
        }
        RowFamily { start, rows }
    }

    pub fn n(&self) -> usize {
        self.start.len() - 1
    }

    pub fn len(&self, i: usize) -> usize {
        self.start[i + 1] - self.start[i]
    }

    pub fn is_empty(&self, i: usize) -> bool {
        self.len(i) == 0
    }

    pub fn members(&self, i: usize) -> impl Iterator<Item = Row<'_>> {
        (self.start[i]..self.start[i + 1]).map(move |k| self.rows.row(k))
    }

    pub fn to_lists(&self) -> Vec<Vec<Vec<(usize, f64)>>> {
        (0..self.n()).map(|i| self.members(i).map(|r| r.to_vec()).collect()).collect()
    }
}

/// The critical graph, its nodes and its strongly connected components.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CriticalResult {
    /// Sorted, without duplicates.
    pub arcs: Vec<(usize, usize)>,
    /// Sorted critical states.
    pub nodes: Vec<usize>,
    /// Components sorted by their minimal state; states sorted inside.
    pub components: Vec<Vec<usize>>,
    /// Number of peeling rounds.
    pub rounds: usize,
}

impl CriticalResult {
    /// Assembles a result from an arc set.
    pub fn from_arcs(n: usize, mut arcs: Vec<(usize, usize)>, rounds: usize) -> Self {
        arcs.sort_unstable();
        arcs.dedup();
        let mut adj = vec![Vec::new(); n];
        let mut on = vec![false; n];
        for &(i, j) in &arcs {
            adj[i].push(j);
            on[i] = true;
            on[j] = true;
        }
        let nodes: Vec<usize> = (0..n).filter(|&i| on[i]).collect();
        let mut components: Vec<Vec<usize>> = strongly_connected_components(&Digraph::from_adjacency(adj))
            .into_iter()
            .filter(|c| on[c[0]])
            .collect();
        components.sort();
        CriticalResult { arcs, nodes, components, rounds }
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        self.nodes.iter().for_each(|&i| m[i] = true);
        m
    }
}

/// The one-player game restricted to actions optimal for `eta` within `eps`,
/// with rewards shifted by `-eta`.
pub fn tangent_game(g: &OnePlayerGame, eta: &[f64], eps: f64) -> OnePlayerGame {
    let mut b = OnePlayerBuilder::new(g.n_states());
    for i in 0..g.n_states() {
        for a in g.max_action_set(eta, i, eps) {
            let row = g.transition(i, a).to_vec();
            b.push(i, g.reward(i, a) - eta[i], &row).expect("rows of a valid game");
        }
    }
    b.finish().expect("action sets are nonempty")
}

/// Rows of actions whose value at `u` is within `eps` of `u`.
pub fn tilde_family(g: &OnePlayerGame, u: &[f64], eps: f64) -> Result<RowFamily, SolveError> {
    let defect = sup_dist(&g.apply(u), u);
    if defect > eps {
        return Err(SolveError::NotHarmonic { defect });
    }
    let mut start = vec![0];
    let mut rows = RowStore::new();
    for i in 0..g.n_states() {
        for b in 0..g.n_actions(i) {
            if (g.value(u, i, b) - u[i]).abs() <= eps {
                rows.push_row(g.transition(i, b).iter());
            }
        }
        start.push(rows.len());
    }
    Ok(RowFamily { start, rows })
}

/// The critical graph of the family by iterative peeling of final classes.
///
/// States left without rows cannot be critical, so they are removed together
/// with every row that puts mass on them before each round.
pub fn critical_graph(family: &RowFamily) -> CriticalResult {
    let n = family.n();
    let mut active = vec![true; n];
    let mut keep: Vec<bool> = vec![true; family.rows.len()];
    let mut arcs = Vec::new();
    let mut rounds = 0;
    let mut local = vec![usize::MAX; n];
    let leaves = |row: Row<'_>, active: &[bool]| -> bool {
        row.iter().filter(|&(j, _)| !active[j]).map(|(_, p)| p).sum::<f64>() > MASS_TOL
    };
    let mut candidates: Vec<usize> = (0..n).collect();
    loop {
        // drop rows escaping the remaining states and states left without rows
        loop {
            let mut changed = false;
            for &i in &candidates {
                if !active[i] {
                    continue;
                }
                let mut any = false;
                for k in family.start[i]..family.start[i + 1] {
                    if keep[k] && leaves(family.rows.row(k), &active) {
                        keep[k] = false;
                    }
                    any |= keep[k];
                }
                if !any {
                    active[i] = false;
                    changed = true;
                }
            }
            candidates.retain(|&i| active[i]);
            if !changed {
                break;
            }
        }
        if candidates.is_empty() {
            break;
        }
        rounds += 1;
        for (k, &i) in candidates.iter().enumerate() {
            local[i] = k;
        }
        let adj: Vec<Vec<usize>> = candidates
            .iter()
            .map(|&i| {
                let mut out: Vec<usize> = (family.start[i]..family.start[i + 1])
                    .filter(|&k| keep[k])
                    .flat_map(|k| family.rows.row(k).cols())
                    .filter(|&j| active[j])
                    .map(|j| local[j])
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();
        let comps = strongly_connected_components(&Digraph::from_adjacency(adj.iter().map(|l| l.iter().copied())));
        let mut comp_of = vec![0; candidates.len()];
        for (c, comp) in comps.iter().enumerate() {
            comp.iter().for_each(|&k| comp_of[k] = c);
        }
        let mut removed = false;
        for (c, comp) in comps.iter().enumerate() {
            let closed = comp.iter().all(|&k| adj[k].iter().all(|&l| comp_of[l] == c));
            let nontrivial = comp.len() > 1 || adj[comp[0]].contains(&comp[0]);
            if closed && nontrivial {
                for &k in comp {
                    for &l in &adj[k] {
                        arcs.push((candidates[k], candidates[l]));
                    }
                }
                for &k in comp {
                    active[candidates[k]] = false;
                }
                removed = true;
            }
        }
        debug_assert!(removed, "every remaining state has a row inside the remaining set");
        if !removed {
            break;
        }
        candidates.retain(|&i| active[i]);
    }
    CriticalResult::from_arcs(n, arcs, rounds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub v: Vec<f64>,
    pub howard_iterations: usize,
    /// `|g(v) - v|` in the sup norm.
    pub defect: f64,
    pub violations: Vec<String>,
}

/// The harmonic vector of `g` that agrees with the super-harmonic `u` on `critical`.
///
/// `delta0` seeds the stopped problem on the free states; by default each
/// state starts from its best action at `u`.
pub fn spectral_projection(
    g: &OnePlayerGame,
    critical: &[bool],
    u: &[f64],
    delta0: Option<&MaxStrategy>,
    opts: &InnerOptions,
) -> Result<Projection, SolveError> {
    let excess = g.apply(u).iter().zip(u).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    if excess > 10.0 * opts.tol.eps_v {
        return Err(SolveError::NotSuperHarmonic { excess });
    }
    let (problem, free) = StoppedProblem::from_boundary(g, critical, u);
    let mut start = match delta0 {
        Some(d) => MaxStrategy(free.iter().map(|&i| d.0[i]).collect()),
        None => MaxStrategy(
            free.iter()
                .map(|&i| {
                    let vals: Vec<f64> = (0..g.n_actions(i)).map(|b| g.value(u, i, b)).collect();
                    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    vals.iter().position(|&x| x >= best - opts.tol.eps_v).expect("nonempty")
                })
                .collect(),
        ),
    };
    if !problem.make_proper(&mut start) {
        return Err(SolveError::ClosedFreeClass);
    }
    let sol = howard_stopped(&problem, &start, opts)?;
    let mut v = u.to_vec();
    for (k, &i) in free.iter().enumerate() {
        v[i] = sol.v[k];
    }
    let defect = sup_dist(&g.apply(&v), &v);
    Ok(Projection { v, howard_iterations: sol.iterations, defect, violations: sol.violations })
}
