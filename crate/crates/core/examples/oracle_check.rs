//! Compares the gradient engine with brute-force recursion over every
//! history on a small board, for a handful of hand-written policies.
//!
//!     cargo run --release --example oracle_check -- adh2

use darkgames::games::{Action, GameSpec, InfoStateKey};
use darkgames::gradient::Game;
use darkgames::oracle::{oracle_expected_value, oracle_exploitability, OracleLimits};
use darkgames::treeplex::{BehavioralPolicy, FnPolicy, UniformPolicy};

/// Prefers low cells, more strongly the more the player has seen.
fn low_cells(key: &InfoStateKey, legal: &[Action]) -> Vec<f64> {
    let w: Vec<f64> = legal
        .iter()
        .map(|a| 1.0 / (1.0 + a.0 as f64 * (1 + key.tokens.len()) as f64))
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Always the highest legal cell.
fn last_cell(_: &InfoStateKey, legal: &[Action]) -> Vec<f64> {
    let mut v = vec![0.0; legal.len()];
    v[legal.len() - 1] = 1.0;
    v
}

fn main() -> darkgames::Result<()> {
    let spec: GameSpec = std::env::args().nth(1).unwrap_or_else(|| "dh2".into()).parse()?;
    let game = Game::new(&spec)?;
    let low = FnPolicy(low_cells);
    let last = FnPolicy(last_cell);
    let policies: [(&str, &dyn BehavioralPolicy); 3] = [("uniform", &UniformPolicy), ("low", &low), ("last", &last)];
    let limits = OracleLimits::default();
    println!("{:>8} {:>8} {:>13} {:>13} {:>13} {:>13}", "p1", "p2", "value", "oracle", "expl", "oracle");
    for (n1, p1) in policies {
        for (n2, p2) in policies {
            let value = game.head_to_head(p1, p2)?;
            let expl = game.exploitability(p1, p2)?;
            let ov = oracle_expected_value(&spec, p1, p2, limits)?;
            let oe = oracle_exploitability(&spec, p1, p2, limits)?;
            println!("{n1:>8} {n2:>8} {:>13.10} {:>13.10} {expl:>13.10} {oe:>13.10}", value + 0.0, ov + 0.0);
            assert!((value - ov).abs() < 1e-9 && (expl - oe).abs() < 1e-9);
        }
    }
    Ok(())
}
