//! The five-state example: one strongly degenerate iteration resolved by the
//! spectral projection, then the textbook trace with a prescribed first bias.

use mppi::game::MinStrategy;
use mppi::generators::example_5node;
use mppi::two_player::{solve, SolveOptions};

fn main() {
    let game = example_5node();
    let sigma0 = MinStrategy(vec![1, 1, 3, 3, 1]);

    let rep = solve(&game, &sigma0, &SolveOptions::default()).expect("solve");
    println!("default run");
    println!("  sigma     {:?}", rep.sigma.0);
    println!("  eta       {:?}", rep.halfline.eta);
    println!("  v         {:?}", rep.halfline.v);
    println!("  strongly degenerate iterations: {}", rep.strongly_degenerate);
    for t in &rep.trace {
        println!("  iteration {}: {} changed states, critical components {:?}", t.iteration, t.changed_states, t.critical_components);
    }

    let mut opts = SolveOptions { strict_trace: true, ..Default::default() };
    opts.injections.insert(0, vec![0.0, 0.0, -0.5, -0.5, 0.0]);
    let rep = solve(&game, &sigma0, &opts).expect("solve");
    println!("strict trace from v0 = (0, 0, -1/2, -1/2, 0)");
    println!("  v         {:?}", rep.halfline.v);
    println!("  residual  {:e}", rep.residual);
}
