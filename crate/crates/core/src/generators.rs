//! Benchmark instances.
//!
//! Random numbers come from `ChaCha8Rng::seed_from_u64`, so instances are
//! reproducible across platforms.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::critical::RowFamily;
use crate::game::{Game, GameBuilder, MinStrategy};

/// Random tug-of-war instance on a graph with `out_degree` arcs per node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RichmanConfig {
    pub n: usize,
    pub out_degree: usize,
    pub seed: u64,
}

impl RichmanConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        RichmanConfig { n, out_degree: 10, seed }
    }
}

/// The tug-of-war game on a weighted graph given as `arcs[i] = [(j, r_ij), ...]`.
///
/// MIN picks an arc `(i, j_a)`, MAX picks an arc `(i, j_b)`; the reward is the
/// mean of both weights and the token moves along either arc with probability
/// one half. Hence `f(x)_i = (max_j (r_ij + x_j) + min_j (r_ij + x_j)) / 2`.
pub fn richman_game(arcs: &[Vec<(usize, f64)>]) -> Game {
    let n = arcs.len();
    let records: usize = arcs.iter().map(|a| a.len() * a.len()).sum();
    let mut gb = GameBuilder::with_capacity(n, records, 2 * records);
    for (i, out) in arcs.iter().enumerate() {
        for (a, &(ja, ra)) in out.iter().enumerate() {
            for (b, &(jb, rb)) in out.iter().enumerate() {
                let reward = 0.5 * (ra + rb);
                let res = if ja == jb { gb.push(i, a, b, reward, &[(ja, 1.0)]) } else { gb.push(i, a, b, reward, &[(ja, 0.5), (jb, 0.5)]) };
                res.expect("valid tug-of-war record");
            }
        }
    }
    gb.finish().expect("every node has an arc")
}

/// Random weighted graph: per node, `out_degree` distinct successors sorted by
/// index, each with a weight drawn uniformly from {0, 1}.
pub fn richman_graph(cfg: &RichmanConfig) -> Vec<Vec<(usize, f64)>> {
    assert!(cfg.out_degree >= 1 && cfg.out_degree <= cfg.n, "out_degree must lie in 1..=n");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n)
        .map(|_| {
            let mut succ = sample(&mut rng, cfg.n, cfg.out_degree).into_vec();
            succ.sort_unstable();
            succ.into_iter().map(|j| (j, rng.random_range(0..2u8) as f64)).collect()
        })
        .collect()
}

pub fn gen_richman(cfg: &RichmanConfig) -> Game {
    richman_game(&richman_graph(cfg))
}

/// Arc weights of the five-node example; rows are sources, columns targets.
pub const EXAMPLE5_WEIGHTS: [[f64; 5]; 5] = [
    [1.0, -1.0, 0.0, 0.0, 0.0],
    [1.0, -1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, -1.0, 0.0],
    [0.0, 0.0, 1.0, -1.0, 0.0],
    [0.0, -1.0, 0.0, -1.0, 1.0],
];

/// Tug of war on the complete five-node graph; action `a` moves towards node `a`.
pub fn example_5node() -> Game {
    let arcs: Vec<Vec<(usize, f64)>> = EXAMPLE5_WEIGHTS.iter().map(|row| row.iter().copied().enumerate().collect()).collect();
    richman_game(&arcs)
}

/// A uniformly random MIN strategy.
pub fn random_min_strategy(game: &Game, seed: u64) -> MinStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MinStrategy((0..game.n_states()).map(|i| rng.random_range(0..game.n_min_actions(i))).collect())
}

/// Shape bounds of random small games.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallGameConfig {
    pub max_states: usize,
    pub max_min_actions: usize,
    pub max_max_actions: usize,
    pub max_arcs: usize,
}

impl Default for SmallGameConfig {
    fn default() -> Self {
        SmallGameConfig { max_states: 5, max_min_actions: 2, max_max_actions: 2, max_arcs: 3 }
    }
}

/// A stochastic row with `1..=max_arcs` distinct targets and weights in {1, 2, 3}.
fn random_row(rng: &mut ChaCha8Rng, n: usize, max_arcs: usize) -> Vec<(usize, f64)> {
    let k = rng.random_range(1..=max_arcs.min(n));
    let mut targets = sample(rng, n, k).into_vec();
    targets.sort_unstable();
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(1..=3u8) as f64).collect();
    let total: f64 = weights.iter().sum();
    targets.into_iter().zip(weights).map(|(j, w)| (j, w / total)).collect()
}

/// A random game within `cfg`, with rewards in {-0.25, -0.125, 0, 0.125, 0.25}.
pub fn random_small_game(cfg: &SmallGameConfig, seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=cfg.max_states);
    let mut gb = GameBuilder::new(n);
    for i in 0..n {
        for a in 0..rng.random_range(1..=cfg.max_min_actions) {
            for b in 0..rng.random_range(1..=cfg.max_max_actions) {
                let reward = rng.random_range(-2..=2i8) as f64 / 8.0;
                let row = random_row(&mut rng, n, cfg.max_arcs);
                gb.push(i, a, b, reward, &row).expect("valid random record");
            }
        }
    }
    gb.finish().expect("every state has actions")
}

/// A random row family with up to `max_states` states and `0..=max_rows` rows per state.
pub fn random_family(max_states: usize, max_rows: usize, seed: u64) -> RowFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_states);
    let lists: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
        .map(|_| {
            // empty families are rare but allowed
            let k = if rng.random_range(0..10) == 0 { 0 } else { rng.random_range(1..=max_rows) };
            (0..k).map(|_| random_row(&mut rng, n, 3)).collect()
        })
        .collect();
    RowFamily::from_lists(&lists)
}

/// Pursuit-evasion on the grid `[-0.5, 0.5]^2` with `m` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatMouseConfig {
    pub m: usize,
    /// Speed of the cat; the mouse has speed one.
    pub speed: f64,
    /// The mouse cannot move strictly inside this radius.
    pub freeze_radius: f64,
}

impl CatMouseConfig {
    pub fn new(m: usize, speed: f64) -> Self {
        CatMouseConfig { m, speed, freeze_radius: 0.1 }
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.m - 1) as f64
    }

    /// Normalizer of the transition probabilities.
    pub fn q_max(&self) -> f64 {
        2.0 * (1.0 + self.speed)
    }

    /// Duration of one step.
    pub fn dt(&self) -> f64 {
        self.h() / self.q_max()
    }
}

#[derive(Clone, Debug)]
pub struct CatMouse {
    pub game: Game,
    pub dt: f64,
    /// Position of each state.
    pub coords: Vec<(f64, f64)>,
}

impl CatMouse {
    /// Mean payoff per unit of time from a per-step mean payoff.
    pub fn rescale(&self, eta_step: &[f64]) -> Vec<f64> {
        eta_step.iter().map(|e| e / self.dt).collect()
    }

    pub fn coords_text(&self) -> String {
        self.coords.iter().enumerate().map(|(k, (x, y))| format!("{k} {x} {y}\n")).collect()
    }
}

/// Axis components allowed at grid index `k`: moving off the grid is removed.
fn axis_moves(k: usize, m: usize, step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(3);
    if k > 0 {
        out.push(-step);
    }
    out.push(0.0);
    if k + 1 < m {
        out.push(step);
    }
    out
}

/// Upwind Markov chain approximation with a uniform time step.
///
/// The state is the relative position `x`. MIN is the cat with velocity in
/// `{0, ±speed}^2`, MAX the mouse with velocity in `{0, ±1}^2`; the drift `g` is
/// the sum. With `Q = 2 (1 + speed)`, the chain moves by `h sign(g_k)` along
/// axis `k` with probability `|g_k| / Q` and stays otherwise. Each step pays `|x|^2 dt` with
/// `dt = h / Q`.
pub fn gen_catmouse(cfg: &CatMouseConfig) -> CatMouse {
    assert!(cfg.m >= 3 && cfg.speed > 0.0, "grid needs three points per axis and a positive speed");
    let m = cfg.m;
    let h = cfg.h();
    let q = cfg.q_max();
    let dt = cfg.dt();
    let idx = |ix: usize, iy: usize| iy * m + ix;
    let mut coords = Vec::with_capacity(m * m);
    let mut gb = GameBuilder::new(m * m);
    let mut row = Vec::with_capacity(5);
    for iy in 0..m {
        for ix in 0..m {
            let (x, y) = (-0.5 + ix as f64 * h, -0.5 + iy as f64 * h);
            coords.push((x, y));
            let reward = (x * x + y * y) * dt;
            let frozen = (x * x + y * y).sqrt() < cfg.freeze_radius;
            let cat: Vec<(f64, f64)> = axis_moves(ix, m, cfg.speed)
                .into_iter()
                .flat_map(|bx| axis_moves(iy, m, cfg.speed).into_iter().map(move |by| (bx, by)))
                .collect();
            let mouse: Vec<(f64, f64)> = if frozen {
                vec![(0.0, 0.0)]
            } else {
                axis_moves(ix, m, 1.0).into_iter().flat_map(|ax| axis_moves(iy, m, 1.0).into_iter().map(move |ay| (ax, ay))).collect()
            };
            for (a, &(bx, by)) in cat.iter().enumerate() {
                for (b, &(ax, ay)) in mouse.iter().enumerate() {
                    let (gx, gy) = (ax + bx, ay + by);
                    row.clear();
                    let stay = 1.0 - (gx.abs() + gy.abs()) / q;
                    if stay > 0.0 {
                        row.push((idx(ix, iy), stay));
                    }
                    if gx != 0.0 {
                        row.push((if gx > 0.0 { idx(ix + 1, iy) } else { idx(ix - 1, iy) }, gx.abs() / q));
                    }
                    if gy != 0.0 {
                        row.push((if gy > 0.0 { idx(ix, iy + 1) } else { idx(ix, iy - 1) }, gy.abs() / q));
                    }
                    gb.push(idx(ix, iy), a, b, reward, &row).expect("valid scheme record");
                }
            }
        }
    }
    CatMouse { game: gb.finish().expect("complete grid"), dt, coords }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapley::apply;

    #[test]
    fn one_node_self_loop() {
        let g = richman_game(&[vec![(0, 2.5)]]);
        assert_eq!(g.n_states(), 1);
        assert_eq!(g.reward(0, 0, 0), 2.5);
        assert_eq!(g.transition(0, 0, 0).to_vec(), vec![(0, 1.0)]);
    }

    #[test]
    fn example_records() {
        let g = example_5node();
        // MIN arc 1 -> 2 with MAX arc 1 -> 1 (0-based: state 0, a = 1, b = 0)
        assert_eq!(g.reward(0, 1, 0), 0.0);
        assert_eq!(g.transition(0, 1, 0).to_vec(), vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(apply(&g, &[0.0; 5]), vec![0.0; 5]);
    }

    #[test]
    fn random_graph_shape() {
        let cfg = RichmanConfig { n: 50, out_degree: 10, seed: 7 };
        let arcs = richman_graph(&cfg);
        assert_eq!(arcs, richman_graph(&cfg));
        for out in &arcs {
            assert_eq!(out.len(), 10);
            assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(out.iter().all(|&(_, r)| r == 0.0 || r == 1.0));
        }
        let g = gen_richman(&cfg);
        assert_eq!(g.n_min_actions(3), 10);
        assert_eq!(g.n_max_actions(3, 9), 10);
    }

    #[test]
    fn catmouse_scheme() {
        let cfg = CatMouseConfig::new(5, 0.5);
        let cm = gen_catmouse(&cfg);
        let g = &cm.game;
        assert_eq!(g.n_states(), 25);
        let centre = 12;
        assert_eq!(cm.coords[centre], (0.0, 0.0));
        for i in 0..25 {
            let (x, y) = cm.coords[i];
            let inside = (x * x + y * y).sqrt() < 0.1;
            for a in 0..g.n_min_actions(i) {
                assert_eq!(g.n_max_actions(i, a) == 1, inside);
                for b in 0..g.n_max_actions(i, a) {
                    let row = g.transition(i, a, b);
                    assert!((row.sum() - 1.0).abs() <= 1e-15);
                    assert!(row.iter().all(|(_, p)| p >= 0.0));
                }
            }
        }
        // corner: cat and mouse each keep two moves per axis
        assert_eq!(g.n_min_actions(0), 4);
        assert_eq!(g.n_max_actions(0, 0), 4);
    }

    #[test]
    fn full_drift_moves_half() {
        let cfg = CatMouseConfig::new(5, 0.5);
        let cm = gen_catmouse(&cfg);
        let g = &cm.game;
        // state (ix, iy) = (1, 2): cat (+0.5, 0) is cat action index 7, mouse (+1, 0) is index 7
        let i = 2 * 5 + 1;
        let row = g.transition(i, 7, 7).to_vec();
        assert_eq!(row, vec![(i, 0.5), (i + 1, 0.5)]);
    }
}
