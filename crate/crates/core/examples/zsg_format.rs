//! Reading and writing games in the ZSG v1 text format.

use mppi::format::{parse_game, serialize_game};
use mppi::generators::example_5node;
use mppi::shapley::apply;

fn main() {
    let text = "zsg 1 2\n# state action reply reward arcs\n0 0 0 1 0:0.5 1:0.5\n0 1 0 0 1:1\n1 0 0 2 0:1\n1 0 1 -1 1:1\n";
    let game = parse_game(text).unwrap();
    println!("{} states, {} records", game.n_states(), game.n_records());
    println!("f(0) = {:?}", apply(&game, &[0.0, 0.0]));
    print!("{}", serialize_game(&game));
    let five = serialize_game(&example_5node());
    assert_eq!(serialize_game(&parse_game(&five).unwrap()), five);
    println!("the five-state example round-trips ({} lines)", five.lines().count());
}
