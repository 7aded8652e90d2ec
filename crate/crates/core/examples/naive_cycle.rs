//! Without the projection at degenerate iterations, policy iteration can
//! return to a strategy it already left.

use mppi::game::MinStrategy;
use mppi::generators::example_5node;
use mppi::two_player::{solve, SolveOptions, StopReason};

fn main() {
    let game = example_5node();
    let sigma0 = MinStrategy(vec![1, 1, 3, 3, 1]);
    let mut opts = SolveOptions { naive: true, strict_trace: true, ..Default::default() };
    opts.injections.insert(0, vec![0.0, 0.0, -0.5, -0.5, 0.0]);
    opts.injections.insert(1, vec![0.0, 0.0, 0.5, 0.5, 0.5]);
    let rep = solve(&game, &sigma0, &opts).expect("solve");
    println!("stop reason {} after {} improvements", rep.stop_reason.as_str(), rep.iterations_outer);
    println!("sigma {:?} was already visited", rep.sigma.0);
    assert_eq!(rep.stop_reason, StopReason::Cycle);

    opts.naive = false;
    let rep = solve(&game, &sigma0, &opts).expect("solve");
    println!("with the projection: stop reason {}, sigma {:?}", rep.stop_reason.as_str(), rep.sigma.0);
}
