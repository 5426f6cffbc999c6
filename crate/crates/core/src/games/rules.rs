//! Board geometry and win detection.
//!
//! Boards are at most 4x4 so every set of cells fits in a `u16` bitmask with
//! cell `r * side + c` at bit `r * side + c`.

use super::{Family, GameSpec, Player};

/// Bitmask of board cells.
pub type CellMask = u16;

#[inline]
pub(crate) fn bit(cell: u8) -> CellMask {
    1 << cell
}

/// Iterates the set cells of a mask in ascending order.
#[inline]
pub(crate) fn cells(mut mask: CellMask) -> impl Iterator<Item = u8> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let c = mask.trailing_zeros() as u8;
            mask &= mask - 1;
            Some(c)
        }
    })
}

/// Hex neighbours of `(r, c)` on a rhombus board.
pub(crate) fn hex_neighbors(side: u8, cell: u8) -> CellMask {
    let n = side as i32;
    let r = cell as i32 / n;
    let c = cell as i32 % n;
    let mut mask = 0;
    for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1), (1, -1), (-1, 1)] {
        let (rr, cc) = (r + dr, c + dc);
        if (0..n).contains(&rr) && (0..n).contains(&cc) {
            mask |= bit((rr * n + cc) as u8);
        }
    }
    mask
}

/// Player one joins the top and bottom rows; player two the left and right
/// columns.
fn hex_connects(side: u8, player: Player, stones: CellMask) -> bool {
    let n = side;
    let (start, goal): (CellMask, CellMask) = match player {
        Player::One => {
            let row = |r: u8| (0..n).fold(0, |m, c| m | bit(r * n + c));
            (row(0), row(n - 1))
        }
        Player::Two => {
            let col = |c: u8| (0..n).fold(0, |m, r| m | bit(r * n + c));
            (col(0), col(n - 1))
        }
    };
    let mut reached = stones & start;
    loop {
        if reached & goal != 0 {
            return true;
        }
        let mut grown = reached;
        for c in cells(reached) {
            grown |= hex_neighbors(side, c) & stones;
        }
        if grown == reached {
            return false;
        }
        reached = grown;
    }
}

const TTT_LINES: [CellMask; 8] = [
    0b000_000_111,
    0b000_111_000,
    0b111_000_000,
    0b001_001_001,
    0b010_010_010,
    0b100_100_100,
    0b100_010_001,
    0b001_010_100,
];

/// Whether `stones` (all belonging to `player`) form a winning pattern.
pub fn is_win(spec: &GameSpec, player: Player, stones: CellMask) -> bool {
    match spec.family {
        Family::DarkHex { side } => hex_connects(side, player, stones),
        Family::PhantomTtt => TTT_LINES.iter().any(|&l| stones & l == l),
    }
}

/// Precomputed win lookup for every stone set of both players, plus the
/// constants the fast walkers need.
#[derive(Debug, Clone)]
pub struct Rules {
    pub(crate) spec: GameSpec,
    pub(crate) num_cells: u8,
    pub(crate) full: CellMask,
    pub(crate) classical: bool,
    win: [Vec<u64>; 2],
}

impl Rules {
    pub fn new(spec: GameSpec) -> Self {
        let num_cells = spec.num_cells();
        let size = 1usize << num_cells;
        let table = |player| {
            let mut bits = vec![0u64; size.div_ceil(64)];
            for mask in 0..size {
                if is_win(&spec, player, mask as CellMask) {
                    bits[mask / 64] |= 1 << (mask % 64);
                }
            }
            bits
        };
        Self {
            spec,
            num_cells,
            full: ((1u32 << num_cells) - 1) as CellMask,
            classical: spec.ruleset == super::Ruleset::Classical,
            win: [table(Player::One), table(Player::Two)],
        }
    }

    #[inline(always)]
    pub fn wins(&self, player: usize, stones: CellMask) -> bool {
        let m = stones as usize;
        (self.win[player][m >> 6] >> (m & 63)) & 1 != 0
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn full_mask(&self) -> CellMask {
        self.full
    }
}
