//! Games, strategies, half-lines and one-player restrictions.

use thiserror::Error;

use crate::sparse::{Row, RowStore, SparseMatrix};

/// Tolerance on transition row sums at ingestion.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("record ({i},{a},{b}) out of order or non-contiguous")]
    OutOfOrder { i: usize, a: usize, b: usize },
    #[error("state {0} is missing or has no actions")]
    MissingState(usize),
    #[error("record ({i},{a},{b}): target {j} out of range")]
    TargetOutOfRange { i: usize, a: usize, b: usize, j: usize },
    #[error("record ({i},{a},{b}): duplicate target {j}")]
    DuplicateTarget { i: usize, a: usize, b: usize, j: usize },
    #[error("record ({i},{a},{b}): invalid probability {p}")]
    BadProbability { i: usize, a: usize, b: usize, p: f64 },
    #[error("record ({i},{a},{b}): row sum {sum} exceeds tolerance")]
    RowSum { i: usize, a: usize, b: usize, sum: f64 },
    #[error("record ({i},{a},{b}): reward {r} is not finite")]
    BadReward { i: usize, a: usize, b: usize, r: f64 },
    #[error("strategy has length {got}, expected {expected}")]
    StrategyLength { got: usize, expected: usize },
    #[error("invalid action {action} at state {state}")]
    InvalidAction { state: usize, action: usize },
    #[error("too many states")]
    TooManyStates,
}

fn check_row(i: usize, a: usize, b: usize, n: usize, row: &mut Vec<(usize, f64)>, stochastic: bool) -> Result<(), GameError> {
    row.retain(|&(_, p)| p != 0.0);
    row.sort_by_key(|&(j, _)| j);
    let mut sum = 0.0;
    for (k, &(j, p)) in row.iter().enumerate() {
        if j >= n {
            return Err(GameError::TargetOutOfRange { i, a, b, j });
        }
        if k > 0 && row[k - 1].0 == j {
            return Err(GameError::DuplicateTarget { i, a, b, j });
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(GameError::BadProbability { i, a, b, p });
        }
        sum += p;
    }
    let bad = if stochastic { (sum - 1.0).abs() > ROW_SUM_TOL } else { sum > 1.0 + ROW_SUM_TOL };
    if bad {
        return Err(GameError::RowSum { i, a, b, sum });
    }
    Ok(())
}

/// A zero-sum stochastic game with perfect information.
///
/// At state `i` MIN picks `a` in `0..n_min_actions(i)`, then MAX picks `b` in
/// `0..n_max_actions(i, a)`; MAX receives `reward(i, a, b)` and the state moves
/// according to `transition(i, a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    n: usize,
    min_start: Vec<usize>,
    max_start: Vec<usize>,
    rewards: Vec<f64>,
    rows: RowStore,
}

impl Game {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn n_min_actions(&self, i: usize) -> usize {
        self.min_start[i + 1] - self.min_start[i]
    }

    pub fn n_max_actions(&self, i: usize, a: usize) -> usize {
        let m = self.min_start[i] + a;
        self.max_start[m + 1] - self.max_start[m]
    }

    pub fn n_records(&self) -> usize {
        self.rewards.len()
    }

    /// Global index of the pair `(i, a)` among all MIN actions.
    #[inline]
    pub fn min_index(&self, i: usize, a: usize) -> usize {
        self.min_start[i] + a
    }

    pub fn n_min_total(&self) -> usize {
        self.max_start.len() - 1
    }

    #[inline]
    fn record(&self, i: usize, a: usize, b: usize) -> usize {
        self.max_start[self.min_start[i] + a] + b
    }

    #[inline]
    pub fn reward(&self, i: usize, a: usize, b: usize) -> f64 {
        self.rewards[self.record(i, a, b)]
    }

    #[inline]
    pub fn transition(&self, i: usize, a: usize, b: usize) -> Row<'_> {
        self.rows.row(self.record(i, a, b))
    }

    /// Rewards and rows of all MAX replies to `(i, a)`.
    #[inline]
    pub(crate) fn replies(&self, i: usize, a: usize) -> impl Iterator<Item = (f64, Row<'_>)> {
        let m = self.min_start[i] + a;
        (self.max_start[m]..self.max_start[m + 1]).map(move |k| (self.rewards[k], self.rows.row(k)))
    }

    /// Iterates `(i, a, b)` in lexicographic order.
    pub fn records(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n_min_actions(i)).flat_map(move |a| (0..self.n_max_actions(i, a)).map(move |b| (i, a, b)))
        })
    }

    /// The game with every reward replaced by zero.
    pub fn without_rewards(&self) -> Game {
        let mut g = self.clone();
        g.rewards.iter_mut().for_each(|r| *r = 0.0);
        g
    }

    pub fn check_min_strategy(&self, sigma: &MinStrategy) -> Result<(), GameError> {
        if sigma.0.len() != self.n {
            return Err(GameError::StrategyLength { got: sigma.0.len(), expected: self.n });
        }
        for (i, &a) in sigma.0.iter().enumerate() {
            if a >= self.n_min_actions(i) {
                return Err(GameError::InvalidAction { state: i, action: a });
            }
        }
        Ok(())
    }
}

/// Streaming constructor for [`Game`]; records must arrive sorted by `(i, a, b)`.
pub struct GameBuilder {
    n: usize,
    min_start: Vec<usize>,
    max_start: Vec<usize>,
    rewards: Vec<f64>,
    rows: RowStore,
    scratch: Vec<(usize, f64)>,
    last: Option<(usize, usize, usize)>,
}

impl GameBuilder {
    pub fn new(n: usize) -> Self {
        Self::with_capacity(n, 0, 0)
    }

    pub fn with_capacity(n: usize, records: usize, entries: usize) -> Self {
        GameBuilder {
            n,
            min_start: vec![0],
            max_start: vec![0],
            rewards: Vec::with_capacity(records),
            rows: RowStore::with_capacity(records, entries),
            scratch: Vec::new(),
            last: None,
        }
    }

    pub fn push(&mut self, i: usize, a: usize, b: usize, reward: f64, row: &[(usize, f64)]) -> Result<(), GameError> {
        let ok = match self.last {
            None => i == 0 && a == 0 && b == 0,
            Some((pi, pa, pb)) => {
                (i == pi && a == pa && b == pb + 1) || (i == pi && a == pa + 1 && b == 0) || (i == pi + 1 && a == 0 && b == 0)
            }
        };
        if !ok || i >= self.n {
            return Err(GameError::OutOfOrder { i, a, b });
        }
        if !reward.is_finite() {
            return Err(GameError::BadReward { i, a, b, r: reward });
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(row);
        check_row(i, a, b, self.n, &mut self.scratch, true)?;
        if b == 0 && self.last.is_some() {
            // a new MIN action begins: close the previous one, and its state if `a == 0`
            self.max_start.push(self.rewards.len());
            if a == 0 {
                self.min_start.push(self.max_start.len() - 1);
            }
        }
        self.rewards.push(reward);
        self.rows.push_row(self.scratch.iter().copied());
        self.last = Some((i, a, b));
        Ok(())
    }

    pub fn finish(mut self) -> Result<Game, GameError> {
        if self.n > u32::MAX as usize {
            return Err(GameError::TooManyStates);
        }
        match self.last {
            None if self.n == 0 => {}
            None => return Err(GameError::MissingState(0)),
            Some((i, _, _)) if i + 1 != self.n => return Err(GameError::MissingState(i + 1)),
            Some(_) => {
                self.max_start.push(self.rewards.len());
                self.min_start.push(self.max_start.len() - 1);
            }
        }
        self.rows.shrink_to_fit();
        Ok(Game { n: self.n, min_start: self.min_start, max_start: self.max_start, rewards: self.rewards, rows: self.rows })
    }
}

/// Feedback strategy of MIN: one action per state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MinStrategy(pub Vec<usize>);

impl MinStrategy {
    pub fn lowest(n: usize) -> Self {
        MinStrategy(vec![0; n])
    }
}

/// Feedback strategy of MAX in a one-player game: one action per state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MaxStrategy(pub Vec<usize>);

impl MaxStrategy {
    pub fn lowest(n: usize) -> Self {
        MaxStrategy(vec![0; n])
    }
}

/// Feedback strategy of MAX in a two-player game: one reply per `(state, MIN action)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MaxReply(pub Vec<usize>);

impl MaxReply {
    pub fn lowest(game: &Game) -> Self {
        MaxReply(vec![0; game.n_min_total()])
    }

    pub fn get(&self, game: &Game, i: usize, a: usize) -> usize {
        self.0[game.min_index(i, a)]
    }

    pub fn set(&mut self, game: &Game, i: usize, a: usize, b: usize) {
        self.0[game.min_index(i, a)] = b;
    }

    /// The one-player strategy obtained when MIN plays `sigma`.
    pub fn under(&self, game: &Game, sigma: &MinStrategy) -> MaxStrategy {
        MaxStrategy(sigma.0.iter().enumerate().map(|(i, &a)| self.get(game, i, a)).collect())
    }
}

/// The affine map `t -> t*eta + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfLine {
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
}

/// A one-player (MAX) game with possibly substochastic rows.
#[derive(Clone, Debug, PartialEq)]
pub struct OnePlayerGame {
    n: usize,
    action_start: Vec<usize>,
    rewards: Vec<f64>,
    rows: RowStore,
    stochastic: bool,
}

impl OnePlayerGame {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn n_actions(&self, i: usize) -> usize {
        self.action_start[i + 1] - self.action_start[i]
    }

    /// True when every row sums to one within the ingestion tolerance.
    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    #[inline]
    pub fn reward(&self, i: usize, b: usize) -> f64 {
        self.rewards[self.action_start[i] + b]
    }

    #[inline]
    pub fn transition(&self, i: usize, b: usize) -> Row<'_> {
        self.rows.row(self.action_start[i] + b)
    }

    #[inline]
    pub(crate) fn actions(&self, i: usize) -> impl Iterator<Item = (f64, Row<'_>)> {
        (self.action_start[i]..self.action_start[i + 1]).map(move |k| (self.rewards[k], self.rows.row(k)))
    }

    pub fn check_strategy(&self, delta: &MaxStrategy) -> Result<(), GameError> {
        if delta.0.len() != self.n {
            return Err(GameError::StrategyLength { got: delta.0.len(), expected: self.n });
        }
        for (i, &b) in delta.0.iter().enumerate() {
            if b >= self.n_actions(i) {
                return Err(GameError::InvalidAction { state: i, action: b });
            }
        }
        Ok(())
    }
}

/// Streaming constructor for [`OnePlayerGame`]; actions are appended state by state.
pub struct OnePlayerBuilder {
    n: usize,
    action_start: Vec<usize>,
    rewards: Vec<f64>,
    rows: RowStore,
    stochastic: bool,
    scratch: Vec<(usize, f64)>,
}

impl OnePlayerBuilder {
    pub fn new(n: usize) -> Self {
        OnePlayerBuilder {
            n,
            action_start: vec![0],
            rewards: Vec::new(),
            rows: RowStore::new(),
            stochastic: true,
            scratch: Vec::new(),
        }
    }

    /// Appends an action to state `i`, which must be the current or the next state.
    pub fn push(&mut self, i: usize, reward: f64, row: &[(usize, f64)]) -> Result<(), GameError> {
        let cur = self.action_start.len() - 1;
        let b = if i == cur + 1 && self.rewards.len() > self.action_start[cur] {
            self.action_start.push(self.rewards.len());
            0
        } else if i == cur {
            self.rewards.len() - self.action_start[cur]
        } else {
            return Err(GameError::OutOfOrder { i, a: 0, b: 0 });
        };
        if i >= self.n {
            return Err(GameError::OutOfOrder { i, a: 0, b });
        }
        if !reward.is_finite() {
            return Err(GameError::BadReward { i, a: 0, b, r: reward });
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(row);
        check_row(i, 0, b, self.n, &mut self.scratch, false)?;
        if (self.scratch.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() > ROW_SUM_TOL {
            self.stochastic = false;
        }
        self.rewards.push(reward);
        self.rows.push_row(self.scratch.iter().copied());
        Ok(())
    }

    pub fn finish(mut self) -> Result<OnePlayerGame, GameError> {
        if self.n == 0 {
            return Ok(OnePlayerGame { n: 0, action_start: vec![0], rewards: vec![], rows: RowStore::new(), stochastic: true });
        }
        let cur = self.action_start.len() - 1;
        if cur + 1 != self.n || self.rewards.len() == self.action_start[cur] {
            return Err(GameError::MissingState(cur.min(self.n - 1)));
        }
        self.action_start.push(self.rewards.len());
        Ok(OnePlayerGame {
            n: self.n,
            action_start: self.action_start,
            rewards: self.rewards,
            rows: self.rows,
            stochastic: self.stochastic,
        })
    }
}

/// The one-player game obtained when MIN is fixed to `sigma`.
pub fn restrict_min(game: &Game, sigma: &MinStrategy) -> Result<OnePlayerGame, GameError> {
    game.check_min_strategy(sigma)?;
    let mut action_start = Vec::with_capacity(game.n + 1);
    action_start.push(0);
    let mut rewards = Vec::new();
    let mut rows = RowStore::new();
    for (i, &a) in sigma.0.iter().enumerate() {
        for (r, row) in game.replies(i, a) {
            rewards.push(r);
            rows.push_row(row.iter());
        }
        action_start.push(rewards.len());
    }
    Ok(OnePlayerGame { n: game.n, action_start, rewards, rows, stochastic: true })
}

/// The affine map `v -> P v + r` obtained when MAX plays `delta`.
pub fn fix_pair(g: &OnePlayerGame, delta: &MaxStrategy) -> Result<(SparseMatrix, Vec<f64>), GameError> {
    g.check_strategy(delta)?;
    let mut rows = RowStore::with_capacity(g.n, 0);
    let mut r = Vec::with_capacity(g.n);
    for (i, &b) in delta.0.iter().enumerate() {
        rows.push_row(g.transition(i, b).iter());
        r.push(g.reward(i, b));
    }
    Ok((SparseMatrix::from_store(rows), r))
}

/// Builds a two-player game from nested lists `records[i][a][b] = (reward, row)`.
pub fn game_from_nested(records: &[Vec<Vec<(f64, Vec<(usize, f64)>)>>]) -> Result<Game, GameError> {
    let mut gb = GameBuilder::new(records.len());
    for (i, acts) in records.iter().enumerate() {
        for (a, replies) in acts.iter().enumerate() {
            for (b, (r, row)) in replies.iter().enumerate() {
                gb.push(i, a, b, *r, row)?;
            }
        }
        if acts.is_empty() || acts.iter().any(|x| x.is_empty()) {
            return Err(GameError::MissingState(i));
        }
    }
    gb.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> Game {
        game_from_nested(&[
            vec![vec![(1.0, vec![(0, 0.5), (1, 0.5)]), (0.0, vec![(1, 1.0)])], vec![(2.0, vec![(0, 1.0)])]],
            vec![vec![(3.0, vec![(1, 1.0)])]],
        ])
        .unwrap()
    }

    #[test]
    fn builder_layout() {
        let g = two_state();
        assert_eq!(g.n_states(), 2);
        assert_eq!(g.n_min_actions(0), 2);
        assert_eq!(g.n_max_actions(0, 0), 2);
        assert_eq!(g.n_max_actions(0, 1), 1);
        assert_eq!(g.n_max_actions(1, 0), 1);
        assert_eq!(g.reward(0, 1, 0), 2.0);
        assert_eq!(g.transition(0, 0, 0).to_vec(), vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(g.records().count(), 4);
    }

    #[test]
    fn builder_rejects_gaps_and_bad_rows() {
        let mut gb = GameBuilder::new(2);
        gb.push(0, 0, 0, 0.0, &[(0, 1.0)]).unwrap();
        assert!(matches!(gb.push(0, 0, 2, 0.0, &[(0, 1.0)]), Err(GameError::OutOfOrder { .. })));
        assert!(matches!(gb.push(0, 0, 1, 0.0, &[(0, 0.6), (1, 0.5)]), Err(GameError::RowSum { .. })));
        assert!(matches!(gb.push(0, 0, 1, 0.0, &[(5, 1.0)]), Err(GameError::TargetOutOfRange { .. })));
        assert!(matches!(gb.push(0, 0, 1, 0.0, &[(1, 0.5), (1, 0.5)]), Err(GameError::DuplicateTarget { .. })));
        assert!(matches!(gb.finish(), Err(GameError::MissingState(1))));
    }

    #[test]
    fn restrict_and_fix() {
        let g = two_state();
        let op = restrict_min(&g, &MinStrategy(vec![0, 0])).unwrap();
        assert_eq!(op.n_actions(0), 2);
        let (p, r) = fix_pair(&op, &MaxStrategy(vec![1, 0])).unwrap();
        assert_eq!(p.to_dense(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(r, vec![0.0, 3.0]);
        assert!(restrict_min(&g, &MinStrategy(vec![2, 0])).is_err());
        assert!(fix_pair(&op, &MaxStrategy(vec![2, 0])).is_err());
    }

    #[test]
    fn one_player_builder_flags_substochastic() {
        let mut b = OnePlayerBuilder::new(2);
        b.push(0, 1.0, &[(0, 0.5)]).unwrap();
        b.push(0, 2.0, &[(1, 1.0)]).unwrap();
        b.push(1, 0.0, &[(1, 1.0)]).unwrap();
        let g = b.finish().unwrap();
        assert!(!g.is_stochastic());
        assert_eq!(g.n_actions(0), 2);
        assert_eq!(g.reward(0, 1), 2.0);
        let mut b = OnePlayerBuilder::new(2);
        b.push(0, 1.0, &[(0, 1.0)]).unwrap();
        assert!(b.finish().is_err());
    }
}
