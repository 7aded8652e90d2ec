//! Policy iteration against exhaustive strategy enumeration and value
//! iteration on seeded small games.

use mppi::cli::{oracle_compare, ORACLE_BRUTE_TOL};

fn main() {
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..50 {
        let o = oracle_compare(seed, 0.0).expect("solve");
        assert!(o.brute_force_gap <= ORACLE_BRUTE_TOL && o.value_iteration_gap <= o.value_iteration_tol, "{o:?}");
        worst = (worst.0.max(o.brute_force_gap), worst.1.max(o.value_iteration_gap));
    }
    println!("50 games agree; worst gaps {:e} (brute force), {:e} (value iteration)", worst.0, worst.1);
}
