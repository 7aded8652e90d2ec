//! The critical graph of a family of stochastic rows, checked against the
//! union of the final graphs of every averaged selection.

use mppi::critical::{critical_graph, RowFamily};
use mppi::generators::random_family;
use mppi::oracles::{brute_force_critical, DEFAULT_CAP};

fn main() {
    let family = RowFamily::from_lists(&[
        vec![vec![(0, 0.5), (1, 0.5)]],
        vec![vec![(0, 0.5), (1, 0.5)]],
        vec![vec![(2, 0.5), (3, 0.5)]],
        vec![vec![(2, 0.5), (3, 0.5)]],
        vec![vec![(3, 0.5), (4, 0.5)]],
    ]);
    let res = critical_graph(&family);
    println!("components {:?}, arcs {:?}", res.components, res.arcs);

    let mut agree = 0;
    for seed in 0..50 {
        let fam = random_family(6, 3, seed);
        let fast = critical_graph(&fam);
        let slow = brute_force_critical(&fam, DEFAULT_CAP).expect("small family");
        agree += usize::from(fast.arcs == slow.arcs);
    }
    println!("{agree} of 50 random families agree with enumeration");
}
