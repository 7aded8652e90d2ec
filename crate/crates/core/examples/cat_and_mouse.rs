//! Pursuit-evasion on a grid: the mean payoff per unit time for a cat slower
//! than, faster than, or as fast as the mouse.
//!
//! Usage: `cargo run --release --example cat_and_mouse [grid]`

use mppi::game::MinStrategy;
use mppi::generators::{gen_catmouse, CatMouseConfig};
use mppi::two_player::{solve, SolveOptions};

fn main() {
    let m: usize = std::env::args().nth(1).map(|a| a.parse().expect("odd grid size")).unwrap_or(33);
    for speed in [0.999, 1.001, 1.0] {
        let cfg = CatMouseConfig::new(m, speed);
        let cm = gen_catmouse(&cfg);
        let n = cm.game.n_states();
        let rep = solve(&cm.game, &MinStrategy::lowest(n), &SolveOptions::default()).expect("solve");
        let eta = cm.rescale(&rep.halfline.eta);
        let outside: Vec<f64> =
            (0..n).filter(|&i| cm.coords[i].0.hypot(cm.coords[i].1) >= cfg.freeze_radius).map(|i| eta[i]).collect();
        let lo = outside.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = outside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = (0..n).map(|i| (eta[i] - cm.coords[i].0.powi(2) - cm.coords[i].1.powi(2)).abs()).fold(0.0, f64::max);
        println!(
            "speed {speed}: eta outside the ball in [{lo:.4}, {hi:.4}], max |eta - |x|^2| = {gap:.3}, {} outer iterations, {:.1} s",
            rep.iterations_outer, rep.wall_seconds
        );
    }
}
