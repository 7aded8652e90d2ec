//! Policy iteration for one-player games.
//!
//! [`howard_stopped`] solves problems with no closed class among the free
//! states, where every strategy has a unique fixed point. [`multichain_pi`] is
//! the Denardo–Fox algorithm for multichain mean-payoff problems: each strategy
//! is evaluated with the bias pinned to zero at the minimal state of every
//! final class, and improvement is lexicographic, first on the slope and then on
//! the bias.

use std::collections::HashSet;

use log::{debug, trace};

use crate::chain::{decompose, solve_eta_v_with, solve_substochastic, ChainError, LinearOptions};
use crate::error::SolveError;
use crate::game::{fix_pair, MaxStrategy, OnePlayerBuilder, OnePlayerGame};
use crate::shapley::{sup_dist, Tolerances};

#[derive(Clone, Debug, PartialEq)]
pub struct InnerOptions {
    pub tol: Tolerances,
    pub linear: LinearOptions,
    pub max_iterations: usize,
    /// Record violations of the monotonicity laws.
    pub check: bool,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { tol: Tolerances::default(), linear: LinearOptions::default(), max_iterations: 10_000, check: false }
    }
}

/// Lowest action whose value is within `eps` of the best, keeping `current` when it qualifies.
fn conservative_argmax(vals: impl Iterator<Item = (usize, f64)> + Clone, current: usize, eps: f64) -> usize {
    let best = vals.clone().fold(f64::NEG_INFINITY, |m, (_, x)| m.max(x));
    let mut first = None;
    for (b, x) in vals {
        if x >= best - eps {
            if b == current {
                return b;
            }
            first.get_or_insert(b);
        }
    }
    first.expect("nonempty action set")
}

/// Row mass below `1 - EXIT_MASS` counts as an exit of a stopped problem.
const EXIT_MASS: f64 = 1e-14;

/// A one-player game on free states; every proper strategy has a unique fixed point.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppedProblem {
    pub game: OnePlayerGame,
}

impl StoppedProblem {
    pub fn new(game: OnePlayerGame) -> Self {
        StoppedProblem { game }
    }

    /// Restricts `g` to the states outside `fixed`, folding the values `u` on
    /// fixed states into the rewards. Returns the problem and the free states.
    pub fn from_boundary(g: &OnePlayerGame, fixed: &[bool], u: &[f64]) -> (Self, Vec<usize>) {
        let n = g.n_states();
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let mut local = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            local[i] = k;
        }
        let mut b = OnePlayerBuilder::new(free.len());
        let mut row = Vec::new();
        for (k, &i) in free.iter().enumerate() {
            for a in 0..g.n_actions(i) {
                row.clear();
                let mut reward = g.reward(i, a);
                for (j, p) in g.transition(i, a).iter() {
                    if fixed[j] {
                        reward += p * u[j];
                    } else {
                        row.push((local[j], p));
                    }
                }
                b.push(k, reward, &row).expect("restriction of a valid game");
            }
        }
        (StoppedProblem { game: b.finish().expect("every free state keeps its actions") }, free)
    }

    /// Switches states that cannot reach an exit under `delta` to actions that
    /// can, layer by layer. Returns false when some state has no such action.
    pub fn make_proper(&self, delta: &mut MaxStrategy) -> bool {
        let g = &self.game;
        let n = g.n_states();
        let exits = |i: usize, b: usize, reach: &[bool]| {
            let row = g.transition(i, b);
            let mass: f64 = row.iter().map(|(_, p)| p).sum();
            mass < 1.0 - EXIT_MASS || row.iter().any(|(j, p)| p > 0.0 && reach[j])
        };
        loop {
            let mut preds = vec![Vec::new(); n];
            let mut reach = vec![false; n];
            let mut stack = Vec::new();
            for i in 0..n {
                for (j, p) in g.transition(i, delta.0[i]).iter() {
                    if p > 0.0 {
                        preds[j].push(i);
                    }
                }
                if exits(i, delta.0[i], &reach) {
                    reach[i] = true;
                    stack.push(i);
                }
            }
            while let Some(j) = stack.pop() {
                for &i in &preds[j] {
                    if !reach[i] {
                        reach[i] = true;
                        stack.push(i);
                    }
                }
            }
            if reach.iter().all(|&r| r) {
                return true;
            }
            let mut changed = false;
            for i in 0..n {
                if !reach[i] {
                    if let Some(b) = (0..g.n_actions(i)).find(|&b| exits(i, b, &reach)) {
                        delta.0[i] = b;
                        changed = true;
                    }
                }
            }
            if !changed {
                return false;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoppedSolution {
    pub v: Vec<f64>,
    pub delta: MaxStrategy,
    pub iterations: usize,
    pub violations: Vec<String>,
}

/// Howard's policy iteration for a stopped problem.
///
/// Values are nondecreasing along the iterations; the result is the unique
/// fixed point of the operator.
pub fn howard_stopped(problem: &StoppedProblem, delta0: &MaxStrategy, opts: &InnerOptions) -> Result<StoppedSolution, SolveError> {
    let g = &problem.game;
    g.check_strategy(delta0)?;
    let mut delta = delta0.clone();
    let mut prev: Option<Vec<f64>> = None;
    let mut violations = Vec::new();
    for it in 1..=opts.max_iterations {
        let (p, r) = fix_pair(g, &delta)?;
        let v = solve_substochastic(&p, &r, &opts.linear).map_err(|e| match e {
            ChainError::NotTransient { .. } => SolveError::ClosedFreeClass,
            e => e.into(),
        })?;
        if opts.check {
            if let Some(w) = &prev {
                if let Some(i) = (0..v.len()).find(|&i| v[i] < w[i] - 1e-12 * (1.0 + w[i].abs())) {
                    violations.push(format!("howard iteration {it}: value decreased at state {i}"));
                }
            }
        }
        let gv = g.apply(&v);
        if sup_dist(&gv, &v) <= opts.tol.eps_g {
            return Ok(StoppedSolution { v, delta, iterations: it, violations });
        }
        let mut changed = false;
        for i in 0..g.n_states() {
            let vals = (0..g.n_actions(i)).map(|b| (b, g.value(&v, i, b)));
            let b = conservative_argmax(vals, delta.0[i], opts.tol.eps_v);
            if b != delta.0[i] {
                delta.0[i] = b;
                changed = true;
            }
        }
        if !changed {
            debug!("howard stopped without improvement at defect {:e}", sup_dist(&gv, &v));
            return Ok(StoppedSolution { v, delta, iterations: it, violations });
        }
        prev = Some(v);
    }
    Err(SolveError::IterationCap { what: "howard_stopped", cap: opts.max_iterations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultichainSolution {
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    pub delta: MaxStrategy,
    pub iterations: usize,
    pub residual: f64,
    pub violations: Vec<String>,
}

/// Slope changes up to this relative size count as ties in the monotonicity
/// check. Larger increases are genuine, however small, and allow the bias to
/// drop: on slowly mixing chains a slope gain of `1e-15` moves the bias by `1e-5`.
const SLOPE_TIE: f64 = 4.0 * f64::EPSILON;

/// Rounding allowance when comparing a slope with the current one.
const SLOPE_ROUNDING: f64 = 8.0 * f64::EPSILON;

/// Denardo–Fox policy iteration for a stochastic one-player game.
pub fn multichain_pi(g: &OnePlayerGame, delta0: &MaxStrategy, opts: &InnerOptions) -> Result<MultichainSolution, SolveError> {
    g.check_strategy(delta0)?;
    let tol = opts.tol;
    let mut delta = delta0.clone();
    let mut seen = HashSet::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut violations = Vec::new();
    for it in 1..=opts.max_iterations {
        if opts.check && !seen.insert(delta.clone()) {
            violations.push(format!("multichain iteration {it}: strategy repeated"));
        }
        let (p, r) = fix_pair(g, &delta)?;
        let d = decompose(&p);
        let pins = d.min_pins();
        let (eta, v) = solve_eta_v_with(&p, &r, &d, &pins, &opts.linear)?;
        if opts.check {
            if let Some((e0, v0)) = &prev {
                for i in 0..eta.len() {
                    if eta[i] < e0[i] - 1e-10 {
                        violations.push(format!("multichain iteration {it}: slope decreased at state {i} ({:e} -> {:e})", e0[i], eta[i]));
                        break;
                    }
                    if (eta[i] - e0[i]).abs() <= SLOPE_TIE * e0[i].abs() && v[i] < v0[i] - 1e-10 * (1.0 + v0[i].abs()) {
                        violations.push(format!(
                            "multichain iteration {it}: bias decreased at state {i} ({:e} -> {:e}, slope change {:e})",
                            v0[i],
                            v[i],
                            eta[i] - e0[i]
                        ));
                        break;
                    }
                }
            }
        }
        let residual = g.residual(&eta, &v, tol.eps_eta);
        if residual <= tol.eps_g {
            return Ok(MultichainSolution { eta, v, delta, iterations: it, residual, violations });
        }
        let mut changed = 0;
        for i in 0..g.n_states() {
            let slopes: Vec<f64> = (0..g.n_actions(i)).map(|b| g.transition(i, b).dot(&eta)).collect();
            let top = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // ties within eps_eta of the top, but never below the current slope
            let floor = (top - tol.eps_eta).max(slopes[delta.0[i]] - SLOPE_ROUNDING * (1.0 + top.abs()));
            let vals = (0..slopes.len()).filter(|&b| slopes[b] >= floor).map(|b| (b, g.value(&v, i, b)));
            let b = conservative_argmax(vals, delta.0[i], tol.eps_v);
            if b != delta.0[i] {
                delta.0[i] = b;
                changed += 1;
            }
        }
        trace!(
            "multichain iteration {it}: residual {residual:e}, {changed} changes, |v| {:e}",
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        );
        if changed == 0 {
            debug!("multichain policy iteration stopped without improvement at residual {residual:e}");
            return Ok(MultichainSolution { eta, v, delta, iterations: it, residual, violations });
        }
        prev = Some((eta, v));
    }
    Err(SolveError::IterationCap { what: "multichain_pi", cap: opts.max_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::mean_payoff_fixed_pair;
    use crate::game::OnePlayerBuilder;
    use proptest::prelude::*;

    fn build(actions: &[Vec<(f64, Vec<(usize, f64)>)>]) -> OnePlayerGame {
        let mut b = OnePlayerBuilder::new(actions.len());
        for (i, acts) in actions.iter().enumerate() {
            for (r, row) in acts {
                b.push(i, *r, row).unwrap();
            }
        }
        b.finish().unwrap()
    }

    fn random_game(n: usize, acts: usize, data: &[(usize, usize, f64, f64)], stochastic: bool) -> OnePlayerGame {
        let mut spec = Vec::new();
        for i in 0..n {
            let mut a = Vec::new();
            for b in 0..acts {
                let (j1, j2, w, r) = data[(i * acts + b) % data.len()];
                let (j1, j2) = ((j1 + i) % n, (j2 + b) % n);
                let mass = if stochastic { 1.0 } else { 0.9 };
                let row = if j1 == j2 { vec![(j1, mass)] } else { vec![(j1, w * mass), (j2, (1.0 - w) * mass)] };
                a.push((r.round(), row));
            }
            spec.push(a);
        }
        build(&spec)
    }

    #[test]
    fn empty_stopped_problem() {
        let g = OnePlayerBuilder::new(0).finish().unwrap();
        let sol = howard_stopped(&StoppedProblem::new(g), &MaxStrategy(vec![]), &InnerOptions::default()).unwrap();
        assert!(sol.v.is_empty());
    }

    #[test]
    fn closed_free_class_is_an_error() {
        let g = build(&[vec![(1.0, vec![(0, 1.0)])]]);
        let err = howard_stopped(&StoppedProblem::new(g), &MaxStrategy(vec![0]), &InnerOptions::default()).unwrap_err();
        assert_eq!(err, SolveError::ClosedFreeClass);
    }

    #[test]
    fn boundary_folding() {
        // state 0 picks between staying (reward 0, leaks half to state 1) and jumping to 1
        let g = build(&[vec![(0.0, vec![(0, 0.5), (1, 0.5)]), (-3.0, vec![(1, 1.0)])], vec![(0.0, vec![(1, 1.0)])]]);
        let (sp, free) = StoppedProblem::from_boundary(&g, &[false, true], &[0.0, 4.0]);
        assert_eq!(free, vec![0]);
        let sol = howard_stopped(&sp, &MaxStrategy(vec![1]), &InnerOptions::default()).unwrap();
        // v = max(0.5 v + 2, 1) = 4
        assert!((sol.v[0] - 4.0).abs() < 1e-12);
        assert_eq!(sol.delta.0, vec![0]);
    }

    #[test]
    fn single_action_matches_chain_solve() {
        let g = build(&[vec![(1.0, vec![(1, 1.0)])], vec![(3.0, vec![(0, 1.0)])], vec![(0.0, vec![(0, 0.5), (2, 0.5)])]]);
        let sol = multichain_pi(&g, &MaxStrategy::lowest(3), &InnerOptions::default()).unwrap();
        let (p, r) = fix_pair(&g, &MaxStrategy::lowest(3)).unwrap();
        let (eta, v) = crate::chain::solve_eta_v(&p, &r, &[0], &LinearOptions::default()).unwrap();
        assert_eq!(sol.eta, eta);
        assert_eq!(sol.v, v);
        assert_eq!(sol.iterations, 1);
    }

    fn exhaustive_eta(g: &OnePlayerGame) -> Vec<f64> {
        let n = g.n_states();
        let mut best = vec![f64::NEG_INFINITY; n];
        let mut delta = vec![0; n];
        loop {
            let (p, r) = fix_pair(g, &MaxStrategy(delta.clone())).unwrap();
            let eta = mean_payoff_fixed_pair(&p, &r, &LinearOptions::default()).unwrap();
            for i in 0..n {
                best[i] = best[i].max(eta[i]);
            }
            let mut k = 0;
            while k < n {
                delta[k] += 1;
                if delta[k] < g.n_actions(k) {
                    break;
                }
                delta[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
        }
    }

    fn value_iteration(g: &OnePlayerGame, iters: usize) -> Vec<f64> {
        let mut v = vec![0.0; g.n_states()];
        for _ in 0..iters {
            v = g.apply(&v);
        }
        v
    }

    proptest! {
        #[test]
        fn multichain_matches_enumeration(
            n in 1usize..5,
            data in prop::collection::vec((0usize..5, 0usize..5, 0.1f64..0.9, -3.0f64..3.0), 1..20),
        ) {
            let g = random_game(n, 2, &data, true);
            let opts = InnerOptions { check: true, ..Default::default() };
            let sol = multichain_pi(&g, &MaxStrategy::lowest(n), &opts).unwrap();
            prop_assert!(sol.residual <= 1e-12, "residual {}", sol.residual);
            prop_assert!(sol.violations.is_empty(), "{:?}", sol.violations);
            let best = exhaustive_eta(&g);
            for i in 0..n { prop_assert!((best[i] - sol.eta[i]).abs() <= 1e-9); }
        }

        #[test]
        fn howard_matches_value_iteration(
            data in prop::collection::vec((0usize..4, 0usize..4, 0.1f64..0.9, -3.0f64..3.0), 1..20),
        ) {
            let g = random_game(4, 2, &data, false);
            let opts = InnerOptions { check: true, ..Default::default() };
            let sol = howard_stopped(&StoppedProblem::new(g.clone()), &MaxStrategy::lowest(4), &opts).unwrap();
            prop_assert!(sol.violations.is_empty(), "{:?}", sol.violations);
            let vi = value_iteration(&g, 2000);
            for i in 0..4 { prop_assert!((vi[i] - sol.v[i]).abs() <= 1e-9); }
        }
    }
}
