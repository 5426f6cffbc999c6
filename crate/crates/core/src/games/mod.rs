//! Rules engines for Dark Hex and Phantom Tic-Tac-Toe.
//!
//! Both games are played on a small board where each player only sees their
//! own pieces. An attempt to place a piece on a cell already holding a
//! hidden opponent piece fails with [`MoveOutcome::Occupied`]. Under the
//! classical ruleset the mover then picks another cell; under the abrupt
//! ruleset the turn passes to the opponent.
//!
//! [`GameState`] is an immutable value with a full transcript. The traversal
//! engines elsewhere in the crate use the compact [`Position`] instead.

mod count;
mod rules;

use std::fmt;
use std::str::FromStr;

pub use count::{count_game, GameCounts};
pub use rules::{is_win, CellMask, Rules};
pub(crate) use rules::{bit, cells};

use crate::error::{Error, Result};

/// The two players. Player one moves first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn from_index(i: usize) -> Player {
        if i == 0 {
            Player::One
        } else {
            Player::Two
        }
    }

    /// 1 or 2.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    DarkHex { side: u8 },
    PhantomTtt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ruleset {
    Classical,
    Abrupt,
}

/// A game variant: board family plus collision ruleset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GameSpec {
    pub family: Family,
    pub ruleset: Ruleset,
}

impl GameSpec {
    /// Dark Hex on a `side x side` rhombus, `side` in `1..=3`.
    pub fn dark_hex(side: u8, ruleset: Ruleset) -> Result<Self> {
        if !(1..=3).contains(&side) {
            return Err(Error::UnsupportedBoard(side));
        }
        Ok(Self {
            family: Family::DarkHex { side },
            ruleset,
        })
    }

    /// Dark Hex accepting side 4 as well. Only the deterministic-winner
    /// search is meant to run on the 4x4 board; counting and the
    /// sequence-form engine do not fit in memory there.
    pub fn dark_hex_extended(side: u8, ruleset: Ruleset) -> Result<Self> {
        if !(1..=4).contains(&side) {
            return Err(Error::UnsupportedBoard(side));
        }
        Ok(Self {
            family: Family::DarkHex { side },
            ruleset,
        })
    }

    pub fn phantom_ttt(ruleset: Ruleset) -> Self {
        Self {
            family: Family::PhantomTtt,
            ruleset,
        }
    }

    pub fn side(&self) -> u8 {
        match self.family {
            Family::DarkHex { side } => side,
            Family::PhantomTtt => 3,
        }
    }

    pub fn num_cells(&self) -> u8 {
        self.side() * self.side()
    }

    pub fn is_classical(&self) -> bool {
        self.ruleset == Ruleset::Classical
    }

    /// Short identifier: `dh1`..`dh3`, `adh1`..`adh3`, `pttt`, `apttt`.
    pub fn id(&self) -> String {
        let prefix = if self.is_classical() { "" } else { "a" };
        match self.family {
            Family::DarkHex { side } => format!("{prefix}dh{side}"),
            Family::PhantomTtt => format!("{prefix}pttt"),
        }
    }

    /// Upper bound on the number of attempts in one play-through. Every
    /// attempt either places a piece or reveals a hidden opponent piece to
    /// the mover, and each piece can be revealed at most once.
    pub fn max_game_length(&self) -> usize {
        2 * self.num_cells() as usize
    }
}

impl FromStr for GameSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (ruleset, rest) = match s.strip_prefix('a') {
            Some(rest) => (Ruleset::Abrupt, rest),
            None => (Ruleset::Classical, s),
        };
        if rest == "pttt" {
            return Ok(GameSpec::phantom_ttt(ruleset));
        }
        if let Some(side) = rest.strip_prefix("dh") {
            if let Ok(side) = side.parse::<u8>() {
                return GameSpec::dark_hex(side, ruleset);
            }
        }
        Err(Error::UnknownGame(s.to_string()))
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// A piece placement attempt: a row-major cell index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(pub u8);

impl Action {
    pub fn cell(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveOutcome {
    Placed,
    Occupied,
}

impl MoveOutcome {
    pub fn symbol(self) -> char {
        match self {
            MoveOutcome::Placed => 'p',
            MoveOutcome::Occupied => 'o',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Piece(Player),
}

/// Compact ground state used by every traversal in the crate.
///
/// `known[p]` holds the opponent cells player `p` has bumped into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub pieces: [CellMask; 2],
    pub known: [CellMask; 2],
    pub to_move: Player,
}

/// Result of one attempt on a [`Position`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// The game goes on with this position.
    Continue(Position),
    /// The game ended; player-one payoff.
    Terminal(Position, i8),
}

impl Position {
    pub const INITIAL: Position = Position {
        pieces: [0, 0],
        known: [0, 0],
        to_move: Player::One,
    };

    pub fn occupied(&self) -> CellMask {
        self.pieces[0] | self.pieces[1]
    }

    /// Cells the mover may attempt: not their own and not revealed to them.
    #[inline]
    pub fn legal_mask(&self, rules: &Rules) -> CellMask {
        let p = self.to_move.index();
        rules.full & !self.pieces[p] & !self.known[p]
    }

    /// Applies an attempt by the mover. The caller guarantees legality.
    #[inline]
    pub fn step(mut self, rules: &Rules, cell: u8) -> (MoveOutcome, Step) {
        let p = self.to_move.index();
        let o = 1 - p;
        let b = bit(cell);
        if self.pieces[o] & b != 0 {
            self.known[p] |= b;
            if !rules.classical {
                self.to_move = self.to_move.opponent();
            }
            return (MoveOutcome::Occupied, Step::Continue(self));
        }
        self.pieces[p] |= b;
        if rules.wins(p, self.pieces[p]) {
            let reward = if p == 0 { 1 } else { -1 };
            return (MoveOutcome::Placed, Step::Terminal(self, reward));
        }
        if self.occupied() == rules.full {
            return (MoveOutcome::Placed, Step::Terminal(self, 0));
        }
        self.to_move = self.to_move.opponent();
        (MoveOutcome::Placed, Step::Continue(self))
    }
}

/// One entry of a game transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub player: Player,
    pub action: Action,
    pub outcome: MoveOutcome,
}

/// Full history of one play-through, including both players' transcripts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameState {
    spec: GameSpec,
    position: Position,
    transcript: Vec<Move>,
    reward: Option<i8>,
}

impl GameState {
    pub fn initial(spec: GameSpec) -> Result<Self> {
        let side = spec.side();
        let max = match spec.family {
            Family::DarkHex { .. } => 4,
            Family::PhantomTtt => 3,
        };
        if side == 0 || side > max {
            return Err(Error::UnsupportedBoard(side));
        }
        Ok(Self {
            spec,
            position: Position::INITIAL,
            transcript: Vec::new(),
            reward: None,
        })
    }

    /// Rebuilds a state by replaying attempts from the initial position.
    pub fn replay(spec: GameSpec, actions: &[Action]) -> Result<Self> {
        let mut state = Self::initial(spec)?;
        for &a in actions {
            state = state.apply_action(a)?;
        }
        Ok(state)
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn position(&self) -> &Position {
        &self.position
    }

    pub fn transcript(&self) -> &[Move] {
        &self.transcript
    }

    /// Player to act. Meaningless once the game is over.
    pub fn acting_player(&self) -> Player {
        self.position.to_move
    }

    pub fn is_terminal(&self) -> bool {
        self.reward.is_some()
    }

    /// Player-one payoff, once terminal.
    pub fn terminal_reward(&self) -> Option<i8> {
        self.reward
    }

    pub fn board(&self) -> Vec<Cell> {
        (0..self.spec.num_cells())
            .map(|c| {
                let b = bit(c);
                if self.position.pieces[0] & b != 0 {
                    Cell::Piece(Player::One)
                } else if self.position.pieces[1] & b != 0 {
                    Cell::Piece(Player::Two)
                } else {
                    Cell::Empty
                }
            })
            .collect()
    }

    fn legal_mask(&self) -> CellMask {
        let p = self.position.to_move.index();
        let full = ((1u32 << self.spec.num_cells()) - 1) as CellMask;
        full & !self.position.pieces[p] & !self.position.known[p]
    }

    pub fn legal_actions(&self) -> Result<Vec<Action>> {
        if self.is_terminal() {
            return Err(Error::TerminalState);
        }
        Ok(cells(self.legal_mask()).map(Action).collect())
    }

    pub fn apply_action(&self, action: Action) -> Result<GameState> {
        if self.is_terminal() {
            return Err(Error::TerminalState);
        }
        if action.0 >= self.spec.num_cells() || self.legal_mask() & bit(action.0) == 0 {
            return Err(Error::IllegalAction(action.0));
        }
        let rules = rules_for(&self.spec);
        let player = self.position.to_move;
        let (outcome, step) = self.position.step(&rules, action.0);
        let mut transcript = self.transcript.clone();
        transcript.push(Move {
            player,
            action,
            outcome,
        });
        let (position, reward) = match step {
            Step::Continue(p) => (p, None),
            Step::Terminal(p, r) => (p, Some(r)),
        };
        Ok(GameState {
            spec: self.spec,
            position,
            transcript,
            reward,
        })
    }

    /// The key of `player`: their own attempts and outcomes, in order.
    pub fn info_state_key(&self, player: Player) -> InfoStateKey {
        InfoStateKey {
            player,
            tokens: self
                .transcript
                .iter()
                .filter(|m| m.player == player)
                .map(|m| (m.action, m.outcome))
                .collect(),
        }
    }
}

/// Small cache so `GameState::apply_action` does not rebuild win tables.
fn rules_for(spec: &GameSpec) -> std::sync::Arc<Rules> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<GameSpec, Arc<Rules>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(*spec)
        .or_insert_with(|| Arc::new(Rules::new(*spec)))
        .clone()
}

/// A player's information state: their own attempts with the outcome each
/// one produced.
///
/// The canonical string form is `<player>:` followed by one
/// `<cell><p|o>` token per attempt, e.g. `1:3p5o`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfoStateKey {
    pub player: Player,
    pub tokens: Vec<(Action, MoveOutcome)>,
}

impl InfoStateKey {
    pub fn root(player: Player) -> Self {
        Self {
            player,
            tokens: Vec::new(),
        }
    }

    pub fn child(&self, action: Action, outcome: MoveOutcome) -> Self {
        let mut tokens = self.tokens.clone();
        tokens.push((action, outcome));
        Self {
            player: self.player,
            tokens,
        }
    }

    /// Own pieces and revealed opponent cells implied by the key.
    pub fn masks(&self) -> (CellMask, CellMask) {
        self.tokens
            .iter()
            .fold((0, 0), |(own, known), &(a, o)| match o {
                MoveOutcome::Placed => (own | bit(a.0), known),
                MoveOutcome::Occupied => (own, known | bit(a.0)),
            })
    }

    /// Legal actions at this key, in ascending cell order.
    pub fn legal_actions(&self, spec: &GameSpec) -> Vec<Action> {
        let (own, known) = self.masks();
        let full = ((1u32 << spec.num_cells()) - 1) as CellMask;
        cells(full & !own & !known).map(Action).collect()
    }

    /// Writes the token part (without the player prefix).
    pub fn tokens_string(&self) -> String {
        let mut s = String::with_capacity(self.tokens.len() * 2);
        for (a, o) in &self.tokens {
            s.push_str(&a.0.to_string());
            s.push(o.symbol());
        }
        s
    }
}

impl fmt::Display for InfoStateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.player, self.tokens_string())
    }
}

impl FromStr for InfoStateKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadKey(s.to_string());
        let (player, body) = s.split_once(':').ok_or_else(bad)?;
        let player = match player {
            "1" => Player::One,
            "2" => Player::Two,
            _ => return Err(bad()),
        };
        let mut tokens = Vec::new();
        let mut num = String::new();
        for ch in body.chars() {
            match ch {
                '0'..='9' => num.push(ch),
                'p' | 'o' => {
                    let cell: u8 = num.parse().map_err(|_| bad())?;
                    num.clear();
                    let outcome = if ch == 'p' {
                        MoveOutcome::Placed
                    } else {
                        MoveOutcome::Occupied
                    };
                    tokens.push((Action(cell), outcome));
                }
                _ => return Err(bad()),
            }
        }
        if !num.is_empty() {
            return Err(bad());
        }
        Ok(Self { player, tokens })
    }
}
