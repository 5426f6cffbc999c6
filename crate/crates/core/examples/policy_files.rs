//! Solves a small game, saves the average strategies as text and binary
//! policy files, reads them back and recomputes exploitability.
//!
//!     cargo run --release --example policy_files -- adh2 /tmp

use darkgames::games::{GameSpec, Player};
use darkgames::gradient::Game;
use darkgames::policy_file::{read_policy, write_policy};
use darkgames::solvers::{run_solver, Algorithm, SolverConfig};
use darkgames::treeplex::tabular_to_sequence_form;
use std::path::PathBuf;

fn main() -> darkgames::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec: GameSpec = args.first().map_or("adh2", String::as_str).parse()?;
    let dir = PathBuf::from(args.get(1).map_or("/tmp", String::as_str));
    let game = Game::new(&spec)?;
    let run = run_solver(&game, &SolverConfig::new(Algorithm::Dcfr), 256, 0)?;
    let tps = [game.treeplex(Player::One), game.treeplex(Player::Two)];
    let tables = [run.average[0].to_tabular(tps[0]), run.average[1].to_tabular(tps[1])];
    println!("after 256 dcfr iterations: exploitability {:.3e}", run.log[0].exploitability);

    for name in [format!("{spec}.txt"), format!("{spec}.bin")] {
        let path = dir.join(&name);
        write_policy(&path, &spec, &[(tps[0], &tables[0]), (tps[1], &tables[1])])?;
        let back = read_policy(&path, &spec, tps)?;
        let x = tabular_to_sequence_form(tps[0], back.table(Player::One).expect("seat one"));
        let y = tabular_to_sequence_form(tps[1], back.table(Player::Two).expect("seat two"));
        let e = game.evaluate(&x, &y)?;
        let bytes = std::fs::metadata(&path)?.len();
        println!("{}: {bytes} bytes, exploitability {:.3e}", path.display(), e.exploitability());
    }
    Ok(())
}
