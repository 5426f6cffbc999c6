//! Lists a player's information states in treeplex order with their
//! sequence ranges and parent sequences.
//!
//!     cargo run --release --example treeplex_inspect -- dh2 2

use darkgames::games::{GameSpec, Player};
use darkgames::treeplex::Treeplex;

fn main() -> darkgames::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec: GameSpec = args.first().map_or("dh2", String::as_str).parse()?;
    let player = match args.get(1).map(String::as_str) {
        Some("2") => Player::Two,
        _ => Player::One,
    };
    let tp = Treeplex::build(&spec, player)?;
    println!(
        "{spec} player {player}: {} infosets, {} sequences, {} bytes",
        tp.num_infosets(),
        tp.num_sequences(),
        tp.memory_bytes()
    );
    let mut shown = 0;
    tp.for_each_key(|id, key| {
        if shown == 40 {
            println!("...");
        }
        shown += 1;
        if shown > 40 {
            return;
        }
        let info = tp.infoset(id);
        let actions: Vec<String> = info.actions().map(|a| a.to_string()).collect();
        println!(
            "{id:>5} {:<24} parent {:>4} seqs {:?} actions {}",
            key.to_string(),
            info.parent_sequence,
            info.sequences(),
            actions.join(",")
        );
    });
    Ok(())
}
