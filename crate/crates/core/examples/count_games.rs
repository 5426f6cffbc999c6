//! Prints tree and information-state sizes.
//!
//!     cargo run --release --example count_games -- dh2 adh2 dh3

use darkgames::games::{count_game, GameSpec, Player};
use darkgames::treeplex::Treeplex;
use std::time::Instant;

fn main() -> darkgames::Result<()> {
    let mut ids: Vec<String> = std::env::args().skip(1).collect();
    if ids.is_empty() {
        ids = vec!["dh1".into(), "dh2".into(), "adh2".into()];
    }
    for id in ids {
        let spec: GameSpec = id.parse()?;
        let t = Instant::now();
        let c = count_game(&spec)?;
        println!(
            "{id}: histories {} terminal {} infosets {} + {} = {} ({:.1}s)",
            c.histories(),
            c.terminal_nodes,
            c.infostates[0],
            c.infostates[1],
            c.total_infostates(),
            t.elapsed().as_secs_f64()
        );
        let s1 = Treeplex::build(&spec, Player::One)?.num_sequences();
        let s2 = Treeplex::build(&spec, Player::Two)?.num_sequences();
        println!("    sequences {s1} + {s2}");
    }
    Ok(())
}
