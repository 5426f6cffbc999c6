//! Runs a tabular solver and prints its convergence log.
//!
//!     cargo run --release --example solve -- dh2 dcfr 1000 100

use darkgames::gradient::Game;
use darkgames::solvers::{run_solver, Algorithm, SolverConfig};

fn main() -> darkgames::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec = args.first().map_or("dh2", String::as_str).parse()?;
    let algo: Algorithm = args.get(1).map_or("cfr+", String::as_str).parse()?;
    let iters: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let every: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(iters / 10);

    let game = Game::new(&spec)?;
    let run = run_solver(&game, &SolverConfig::new(algo), iters, every)?;
    println!("{spec} {algo}");
    println!("{:>8} {:>14} {:>14} {:>9}", "iter", "value", "exploitability", "seconds");
    for row in &run.log {
        println!(
            "{:>8} {:>14.9} {:>14.9} {:>9.2}",
            row.iteration, row.value, row.exploitability, row.wall_seconds
        );
    }
    Ok(())
}
