//! Class decomposition and mean payoff of a fixed Markov chain.

use mppi::chain::{decompose, mean_payoff_fixed_pair, solve_eta_v, LinearOptions};
use mppi::sparse::SparseMatrix;

fn main() {
    let p = SparseMatrix::from_dense(&[
        vec![0.5, 0.25, 0.25, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ]);
    let r = [0.0, 1.0, 3.0, -1.0];
    let d = decompose(&p);
    for (c, states) in d.classes.iter().enumerate() {
        println!("class {states:?} {}", if d.is_final[c] { "final" } else { "transient" });
    }
    let opts = LinearOptions::default();
    println!("eta {:?}", mean_payoff_fixed_pair(&p, &r, &opts).unwrap());
    let (eta, v) = solve_eta_v(&p, &r, &d.min_pins(), &opts).unwrap();
    println!("eta {eta:?}, v {v:?} with v = 0 at {:?}", d.min_pins());
}
