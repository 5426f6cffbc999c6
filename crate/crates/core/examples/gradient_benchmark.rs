use darkgames::games::{GameSpec, Player};
use darkgames::gradient::Game;
use darkgames::treeplex::uniform_sequence_form;
use std::time::Instant;

fn main() -> darkgames::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "dh3".into());
    let spec: GameSpec = id.parse()?;
    let t = Instant::now();
    let game = Game::new(&spec)?;
    println!("{id}: treeplexes built in {:.1}s", t.elapsed().as_secs_f64());
    let x = uniform_sequence_form(game.treeplex(Player::One));
    let y = uniform_sequence_form(game.treeplex(Player::Two));
    let t = Instant::now();
    let e = game.evaluate(&x, &y)?;
    println!(
        "uniform profile: value {:.9} gap {:.9} ({:.1}s, {} threads)",
        e.value,
        e.nash_gap,
        t.elapsed().as_secs_f64(),
        game.threads()
    );
    Ok(())
}
