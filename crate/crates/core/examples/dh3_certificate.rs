//! Finds a deterministic winning strategy for player one on classical
//! Dark Hex and proves it wins against every opponent.
//!
//!     cargo run --release --example dh3_certificate -- 3 pi

use darkgames::dh3::{search_with, verify_winning, Prune, SearchOptions};
use darkgames::games::{GameSpec, Ruleset};
use darkgames::gradient::Game;
use std::time::Instant;

fn main() -> darkgames::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let side: u8 = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let prune = match args.get(1).map(String::as_str) {
        Some("pi") => Prune::PerfectInformation,
        _ => Prune::CompatibleStates,
    };
    let spec = GameSpec::dark_hex(side, Ruleset::Classical)?;

    let t = Instant::now();
    let opts = SearchOptions {
        prune,
        threads: 1,
        ..Default::default()
    };
    let report = search_with(&spec, &opts)?;
    println!("searched {} information states in {:.1}s", report.states, t.elapsed().as_secs_f64());
    let Some(strategy) = report.strategy else {
        println!("no deterministic winning strategy");
        return Ok(());
    };
    println!("strategy with {} turn-start lists; opening lists:", strategy.len());
    let mut out = Vec::new();
    strategy.write_text(&mut out)?;
    for line in String::from_utf8_lossy(&out).lines().take(6) {
        println!("  {line}");
    }

    let t = Instant::now();
    let game = Game::new(&spec)?;
    let v = verify_winning(&game, &strategy)?;
    println!(
        "min value {:.12}, value vs uniform {}, proven: {} ({:.1}s)",
        v.min_value,
        v.value_vs_uniform,
        v.proven(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
