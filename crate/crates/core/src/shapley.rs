//! The Shapley operator, its recession function and its tangent at infinity.
//!
//! For a game, `F(v; i, a) = max_b (P^{ab}_i v + r^{ab}_i)` and
//! `f(v)_i = min_a F(v; i, a)`. Dropping rewards gives the recession function
//! `f_hat`. The tangent `f_eta` restricts both players to actions that are optimal
//! for `f_hat(eta)`. Ties always resolve to the lowest action index.

use crate::game::{Game, HalfLine, OnePlayerGame};

/// Tolerances used by the solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Bound on the final residual.
    pub eps_g: f64,
    /// Slope comparisons.
    pub eps_eta: f64,
    /// Bias comparisons.
    pub eps_v: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_g: 1e-12, eps_eta: 1e-10, eps_v: 1e-10 }
    }
}

pub(crate) fn sup_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
}

/// `F(v; i, a)`: the best MAX reply to MIN action `a` at state `i`.
pub fn action_value(game: &Game, v: &[f64], i: usize, a: usize) -> f64 {
    game.replies(i, a).map(|(r, row)| row.dot(v) + r).fold(f64::NEG_INFINITY, f64::max)
}

/// The Shapley operator `f(v)`.
pub fn apply(game: &Game, v: &[f64]) -> Vec<f64> {
    (0..game.n_states())
        .map(|i| (0..game.n_min_actions(i)).map(|a| action_value(game, v, i, a)).fold(f64::INFINITY, f64::min))
        .collect()
}

fn recession_action(game: &Game, eta: &[f64], i: usize, a: usize) -> f64 {
    game.replies(i, a).map(|(_, row)| row.dot(eta)).fold(f64::NEG_INFINITY, f64::max)
}

/// The recession function `f_hat(eta)`.
pub fn recession(game: &Game, eta: &[f64]) -> Vec<f64> {
    (0..game.n_states())
        .map(|i| (0..game.n_min_actions(i)).map(|a| recession_action(game, eta, i, a)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// MIN actions within `eps` of the minimum of the recession function at `i`.
pub fn min_action_set(game: &Game, eta: &[f64], i: usize, eps: f64) -> Vec<usize> {
    let vals: Vec<f64> = (0..game.n_min_actions(i)).map(|a| recession_action(game, eta, i, a)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    (0..vals.len()).filter(|&a| vals[a] <= best + eps).collect()
}

/// MAX replies to `(i, a)` within `eps` of the maximum of `P eta`.
pub fn max_action_set(game: &Game, eta: &[f64], i: usize, a: usize, eps: f64) -> Vec<usize> {
    let vals: Vec<f64> = game.replies(i, a).map(|(_, row)| row.dot(eta)).collect();
    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..vals.len()).filter(|&b| vals[b] >= best - eps).collect()
}

/// `F_eta(v; i, a)`: the best reply to `a` among replies optimal for `eta` within `eps`.
pub fn tangent_action_value(game: &Game, eta: &[f64], v: &[f64], i: usize, a: usize, eps: f64) -> f64 {
    let top = recession_action(game, eta, i, a);
    game.replies(i, a)
        .filter(|(_, row)| row.dot(eta) >= top - eps)
        .map(|(r, row)| row.dot(v) + r)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The tangent at infinity `f_eta(v)` with exact action sets.
pub fn tangent(game: &Game, eta: &[f64], v: &[f64]) -> Vec<f64> {
    tangent_with(game, eta, v, 0.0)
}

/// The tangent at infinity with action sets relaxed by `eps`.
pub fn tangent_with(game: &Game, eta: &[f64], v: &[f64], eps: f64) -> Vec<f64> {
    (0..game.n_states())
        .map(|i| {
            min_action_set(game, eta, i, eps)
                .into_iter()
                .map(|a| tangent_action_value(game, eta, v, i, a, eps))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `0.5 (|f_hat(eta) - eta| + |f_eta(v) - eta - v|)` in the sup norm, with exact action sets.
pub fn residual(game: &Game, hl: &HalfLine) -> f64 {
    residual_with(game, hl, 0.0)
}

/// The residual with action sets relaxed by `eps`.
pub fn residual_with(game: &Game, hl: &HalfLine, eps: f64) -> f64 {
    let slope = sup_dist(&recession(game, &hl.eta), &hl.eta);
    let shifted: Vec<f64> = hl.eta.iter().zip(&hl.v).map(|(e, v)| e + v).collect();
    0.5 * (slope + sup_dist(&tangent_with(game, &hl.eta, &hl.v, eps), &shifted))
}

impl OnePlayerGame {
    /// `G(v; i, b) = P^b_i v + r^b_i`.
    #[inline]
    pub fn value(&self, v: &[f64], i: usize, b: usize) -> f64 {
        self.transition(i, b).dot(v) + self.reward(i, b)
    }

    /// The operator `g(v)_i = max_b G(v; i, b)`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_states())
            .map(|i| self.actions(i).map(|(r, row)| row.dot(v) + r).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// The recession function `g_hat(eta)`.
    pub fn recession(&self, eta: &[f64]) -> Vec<f64> {
        (0..self.n_states())
            .map(|i| self.actions(i).map(|(_, row)| row.dot(eta)).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Actions within `eps` of the maximum of `P eta` at `i`.
    pub fn max_action_set(&self, eta: &[f64], i: usize, eps: f64) -> Vec<usize> {
        let vals: Vec<f64> = self.actions(i).map(|(_, row)| row.dot(eta)).collect();
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&b| vals[b] >= best - eps).collect()
    }

    /// The tangent at infinity `g_eta(v)` with action sets relaxed by `eps`.
    pub fn tangent(&self, eta: &[f64], v: &[f64], eps: f64) -> Vec<f64> {
        (0..self.n_states())
            .map(|i| {
                let top = self.actions(i).map(|(_, row)| row.dot(eta)).fold(f64::NEG_INFINITY, f64::max);
                self.actions(i)
                    .filter(|(_, row)| row.dot(eta) >= top - eps)
                    .map(|(r, row)| row.dot(v) + r)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Residual of the one-player invariant half-line system.
    pub fn residual(&self, eta: &[f64], v: &[f64], eps: f64) -> f64 {
        let slope = sup_dist(&self.recession(eta), eta);
        let t = self.tangent(eta, v, eps);
        let bias = t.iter().zip(eta).zip(v).fold(0.0, |m, ((t, e), v)| f64::max(m, (t - e - v).abs()));
        0.5 * (slope + bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{game_from_nested, restrict_min, MinStrategy};

    fn matching_pennies() -> Game {
        // MIN picks a row, MAX a column; state 1 is absorbing with reward 1
        game_from_nested(&[
            vec![
                vec![(0.0, vec![(0, 1.0)]), (2.0, vec![(0, 0.5), (1, 0.5)])],
                vec![(1.0, vec![(0, 1.0)]), (-1.0, vec![(1, 1.0)])],
            ],
            vec![vec![(1.0, vec![(1, 1.0)])]],
        ])
        .unwrap()
    }

    #[test]
    fn one_state_value() {
        let g = game_from_nested(&[vec![vec![(2.0, vec![(0, 1.0)])]]]).unwrap();
        assert_eq!(action_value(&g, &[0.0], 0, 0), 2.0);
        assert_eq!(apply(&g, &[0.0]), vec![2.0]);
    }

    #[test]
    fn apply_min_max() {
        let g = matching_pennies();
        let v = [0.0, 1.0];
        assert_eq!(action_value(&g, &v, 0, 0), 2.5);
        assert_eq!(action_value(&g, &v, 0, 1), 1.0);
        assert_eq!(apply(&g, &v), vec![1.0, 2.0]);
    }

    #[test]
    fn action_sets_and_tangent() {
        let g = matching_pennies();
        let eta = [0.0, 1.0];
        assert_eq!(recession(&g, &eta), vec![0.5, 1.0]);
        assert_eq!(min_action_set(&g, &eta, 0, 0.0), vec![0]);
        assert_eq!(min_action_set(&g, &eta, 0, 0.6), vec![0, 1]);
        assert_eq!(max_action_set(&g, &eta, 0, 0, 0.0), vec![1]);
        assert_eq!(max_action_set(&g, &eta, 0, 1, 0.0), vec![1]);
        assert_eq!(tangent(&g, &eta, &[0.0, 0.0]), vec![2.0, 1.0]);
    }

    #[test]
    fn residual_of_solution() {
        // state 1 absorbing with reward 1, state 0 can stay with reward 0 if MIN plays 0 and MAX 0
        let g = matching_pennies();
        let hl = HalfLine { eta: vec![1.0, 1.0], v: vec![0.0, 0.0] };
        // f_hat(eta) = (1, 1); tangent at (0,0): a=0 -> max(0, 2)=2, a=1 -> max(1,-1)=1 -> min 1
        assert_eq!(residual(&g, &hl), 0.0);
        let bad = HalfLine { eta: vec![0.0, 1.0], v: vec![0.0, 0.0] };
        assert!(residual(&g, &bad) > 0.0);
    }

    #[test]
    fn restriction_matches_action_value() {
        let g = matching_pennies();
        let sigma = MinStrategy(vec![1, 0]);
        let op = restrict_min(&g, &sigma).unwrap();
        let v = [0.3, -1.7];
        let direct: Vec<f64> = (0..2).map(|i| action_value(&g, &v, i, sigma.0[i])).collect();
        assert_eq!(op.apply(&v), direct);
    }
}
