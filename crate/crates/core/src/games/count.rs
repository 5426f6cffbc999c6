//! Game-tree size statistics.
//!
//! The number of histories below a node only depends on the ground
//! position (both boards plus what each player has bumped into), so the
//! tree is counted by memoising over positions instead of walking tens of
//! billions of nodes.

use super::{bit, GameSpec, Position, Rules, Step};
use crate::error::{Error, Result};
use crate::treeplex::Treeplex;

/// Tree and information-state sizes of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameCounts {
    /// Decision nodes, the initial position included.
    pub decision_nodes: u64,
    pub terminal_nodes: u64,
    /// Information states at which each player acts.
    pub infostates: [u64; 2],
}

impl GameCounts {
    /// Decision plus terminal nodes.
    pub fn histories(&self) -> u64 {
        self.decision_nodes + self.terminal_nodes
    }

    pub fn total_infostates(&self) -> u64 {
        self.infostates[0] + self.infostates[1]
    }
}

/// Counts histories and information states of `spec`.
pub fn count_game(spec: &GameSpec) -> Result<GameCounts> {
    let (decision_nodes, terminal_nodes) = count_histories(spec)?;
    let infostates = [
        Treeplex::build(spec, super::Player::One)?.num_infosets() as u64,
        Treeplex::build(spec, super::Player::Two)?.num_infosets() as u64,
    ];
    Ok(GameCounts {
        decision_nodes,
        terminal_nodes,
        infostates,
    })
}

/// `(decision nodes, terminal nodes)` of the full tree.
pub fn count_histories(spec: &GameSpec) -> Result<(u64, u64)> {
    let n = spec.num_cells() as u32;
    if n > 9 {
        return Err(Error::UnsupportedBoard(spec.side()));
    }
    let rules = Rules::new(*spec);
    let mut memo = vec![(u64::MAX, 0u64); 2 * 5usize.pow(n)];
    Ok(count_from(&rules, Position::INITIAL, &mut memo))
}

/// Base-5 cell code: empty, p1 hidden, p1 seen by p2, p2 hidden, p2 seen by p1.
fn encode(rules: &Rules, pos: &Position) -> usize {
    let mut code = 0usize;
    for c in (0..rules.num_cells).rev() {
        let b = bit(c);
        let digit = if pos.pieces[0] & b != 0 {
            1 + (pos.known[1] & b != 0) as usize
        } else if pos.pieces[1] & b != 0 {
            3 + (pos.known[0] & b != 0) as usize
        } else {
            0
        };
        code = code * 5 + digit;
    }
    code * 2 + pos.to_move.index()
}

fn count_from(rules: &Rules, pos: Position, memo: &mut [(u64, u64)]) -> (u64, u64) {
    let key = encode(rules, &pos);
    if memo[key].0 != u64::MAX {
        return memo[key];
    }
    let mut decision = 1u64;
    let mut terminal = 0u64;
    for cell in super::cells(pos.legal_mask(rules)) {
        match pos.step(rules, cell).1 {
            Step::Continue(next) => {
                let (d, t) = count_from(rules, next, memo);
                decision += d;
                terminal += t;
            }
            Step::Terminal(..) => terminal += 1,
        }
    }
    memo[key] = (decision, terminal);
    (decision, terminal)
}
