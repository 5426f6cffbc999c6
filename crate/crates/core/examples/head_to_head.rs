//! Plays solver outputs against each other with seats swapped half of
//! the time. Values are exact, not sampled.
//!
//!     cargo run --release --example head_to_head -- adh2 64

use darkgames::games::{GameSpec, Player};
use darkgames::gradient::Game;
use darkgames::solvers::{run_solver, Algorithm, SolverConfig};
use darkgames::treeplex::{TabularPolicy, UniformPolicy};

fn main() -> darkgames::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec: GameSpec = args.first().map_or("adh2", String::as_str).parse()?;
    let iters: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let game = Game::new(&spec)?;
    let tps = [game.treeplex(Player::One), game.treeplex(Player::Two)];

    let algos = [Algorithm::Cfr, Algorithm::CfrPlus, Algorithm::Dcfr, Algorithm::Fp, Algorithm::Mmd];
    let mut agents: Vec<(String, [TabularPolicy; 2])> = vec![(
        "uniform".into(),
        [TabularPolicy::uniform(tps[0]), TabularPolicy::uniform(tps[1])],
    )];
    for algo in algos {
        let run = run_solver(&game, &SolverConfig::new(algo), iters, 0)?;
        agents.push((algo.to_string(), [run.average[0].to_tabular(tps[0]), run.average[1].to_tabular(tps[1])]));
    }

    print!("{:>8}", "");
    for (name, _) in &agents {
        print!("{name:>9}");
    }
    println!();
    for (na, a) in &agents {
        print!("{na:>8}");
        for (_, b) in &agents {
            let v = game.symmetrized_value((&a[0], &a[1]), (&b[0], &b[1]))?;
            print!("{:>9.4}", v + 0.0);
        }
        println!();
    }
    let v = game.head_to_head(&UniformPolicy, &UniformPolicy)?;
    println!("uniform self-play value for player one: {v:.6}");
    Ok(())
}
