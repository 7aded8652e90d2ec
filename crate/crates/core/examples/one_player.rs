//! One-player solvers: multichain policy iteration for the mean payoff and
//! Howard iteration for a stopped problem.

use mppi::game::{MaxStrategy, OnePlayerBuilder};
use mppi::one_player::{howard_stopped, multichain_pi, InnerOptions, StoppedProblem};

fn main() {
    // state 0 chooses between a loop paying 1 and a jump to the two-state cycle paying 2 on average
    let mut b = OnePlayerBuilder::new(3);
    b.push(0, 1.0, &[(0, 1.0)]).unwrap();
    b.push(0, 0.0, &[(1, 1.0)]).unwrap();
    b.push(1, 3.0, &[(2, 1.0)]).unwrap();
    b.push(2, 1.0, &[(1, 1.0)]).unwrap();
    let g = b.finish().unwrap();
    let sol = multichain_pi(&g, &MaxStrategy::lowest(3), &InnerOptions::default()).unwrap();
    println!("eta {:?}, v {:?}, strategy {:?}, {} iterations", sol.eta, sol.v, sol.delta.0, sol.iterations);

    // a stopped problem: each step keeps half the mass
    let mut b = OnePlayerBuilder::new(2);
    b.push(0, 1.0, &[(1, 0.5)]).unwrap();
    b.push(0, 0.0, &[(0, 0.5)]).unwrap();
    b.push(1, 2.0, &[(0, 0.5)]).unwrap();
    let sp = StoppedProblem::new(b.finish().unwrap());
    let sol = howard_stopped(&sp, &MaxStrategy::lowest(2), &InnerOptions::default()).unwrap();
    println!("stopped values {:?}, strategy {:?}", sol.v, sol.delta.0);
}
