//! Random tug-of-war games: iteration counts and degenerate iterations.
//!
//! Usage: `cargo run --release --example richman [nodes] [seeds]`

use std::time::Instant;

use mppi::game::MinStrategy;
use mppi::generators::{gen_richman, RichmanConfig};
use mppi::two_player::{solve, SolveOptions};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let n = args.next().unwrap_or(1000) as usize;
    let seeds = args.next().unwrap_or(10);
    let opts = SolveOptions::default();
    let mut strong = 0;
    println!("seed  outer  inner  degenerate  strong  residual   seconds");
    for seed in 0..seeds {
        let game = gen_richman(&RichmanConfig::new(n, seed));
        let t = Instant::now();
        let rep = solve(&game, &MinStrategy::lowest(n), &opts).expect("solve");
        strong += usize::from(rep.strongly_degenerate > 0);
        println!(
            "{seed:>4}  {:>5}  {:>5}  {:>10}  {:>6}  {:.1e}  {:.2}",
            rep.iterations_outer,
            rep.iterations_inner_total,
            rep.degenerate,
            rep.strongly_degenerate,
            rep.residual,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{strong} of {seeds} instances had a strongly degenerate iteration");
}
