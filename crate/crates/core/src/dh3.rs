//! Deterministic winning strategies for player one in classical Dark Hex.
//!
//! A strategy gives, at every information state where a turn starts, a
//! list of cells to try in order: when an attempt hits a hidden opponent
//! piece the next cell of the list is tried. The searcher looks for such a
//! strategy by backtracking over player one's information states; the
//! verifier checks a strategy against every opponent at once through one
//! gradient pass and a best response.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::games::{bit, cells, Action, CellMask, Family, GameSpec, InfoStateKey, MoveOutcome, Player, Rules};
use crate::gradient::Game;
use crate::treeplex::{greedy_best_response, to_sequence_form, uniform_sequence_form, BehavioralPolicy};

/// Ordered attempt lists of player one, keyed by the information state at
/// the start of each turn.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OrderedActionStrategy {
    pub lists: BTreeMap<InfoStateKey, Vec<Action>>,
}

impl OrderedActionStrategy {
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// The list at a turn-start key.
    pub fn list(&self, key: &InfoStateKey) -> Option<&[Action]> {
        self.lists.get(key).map(Vec::as_slice)
    }

    /// Deterministic behavioural policy playing the lists.
    pub fn to_behavioral(&self) -> OrderedPolicy<'_> {
        OrderedPolicy { strategy: self }
    }

    /// One line per turn-start key: `key<TAB>a0,a1,...`.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        for (key, list) in &self.lists {
            let actions: Vec<String> = list.iter().map(|a| a.0.to_string()).collect();
            writeln!(w, "{key}\t{}", actions.join(","))?;
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut lists = BTreeMap::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Format(format!("line {}: `{line}`", n + 1));
            let (key, actions) = line.split_once('\t').ok_or_else(bad)?;
            let key: InfoStateKey = key.parse()?;
            let list = actions
                .split(',')
                .map(|a| a.trim().parse::<u8>().map(Action).map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            if key.player != Player::One || list.is_empty() {
                return Err(bad());
            }
            if lists.insert(key, list).is_some() {
                return Err(bad());
            }
        }
        Ok(Self { lists })
    }
}

/// Behavioural view of an [`OrderedActionStrategy`]. After `k` failed
/// attempts of a turn the `k`-th list entry is played; information states
/// the strategy never reaches get their lowest legal cell.
#[derive(Debug, Clone, Copy)]
pub struct OrderedPolicy<'a> {
    strategy: &'a OrderedActionStrategy,
}

impl OrderedPolicy<'_> {
    /// Cell chosen at `key`, or `None` where the strategy does not reach.
    pub fn choice(&self, key: &InfoStateKey) -> Result<Option<Action>> {
        let failed = key
            .tokens
            .iter()
            .rev()
            .take_while(|(_, o)| *o == MoveOutcome::Occupied)
            .count();
        let start = InfoStateKey {
            player: key.player,
            tokens: key.tokens[..key.tokens.len() - failed].to_vec(),
        };
        let Some(list) = self.strategy.lists.get(&start) else {
            return Ok(None);
        };
        let tried = &key.tokens[key.tokens.len() - failed..];
        if tried.iter().zip(list).any(|((a, _), b)| a != b) {
            return Ok(None);
        }
        match list.get(failed) {
            Some(&a) => Ok(Some(a)),
            None => Err(Error::BadDistribution {
                key: key.to_string(),
                reason: format!("attempt list of length {} exhausted", list.len()),
            }),
        }
    }
}

impl BehavioralPolicy for OrderedPolicy<'_> {
    fn action_probabilities(&self, key: &InfoStateKey, legal: &[Action], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        let pick = match self.choice(key)? {
            Some(a) => legal.iter().position(|&l| l == a).ok_or_else(|| Error::BadDistribution {
                key: key.to_string(),
                reason: format!("listed cell {a} is not legal"),
            })?,
            None => 0,
        };
        out[pick] = 1.0;
        Ok(())
    }
}

/// Outcome of [`verify_winning`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// Guaranteed player-one value: the value against a best-responding
    /// opponent.
    pub min_value: f64,
    /// Value against the uniform opponent.
    pub value_vs_uniform: f64,
}

impl Verification {
    /// Wins against every opponent.
    pub fn proven(&self) -> bool {
        (self.min_value - 1.0).abs() <= 1e-9
    }
}

fn check_classical_hex(spec: &GameSpec) -> Result<()> {
    if !matches!(spec.family, Family::DarkHex { .. }) || !spec.is_classical() {
        return Err(Error::Unsupported(format!(
            "ordered attempt lists need classical Dark Hex, not {spec}"
        )));
    }
    Ok(())
}

/// Best-response check of a strategy on `game` (classical Dark Hex), from a
/// single gradient pass.
pub fn verify_winning(game: &Game, strategy: &OrderedActionStrategy) -> Result<Verification> {
    check_classical_hex(game.spec())?;
    let x = to_sequence_form(game.treeplex(Player::One), &strategy.to_behavioral())?;
    let g2 = game.gradient_p2(&x)?;
    let (_, br2) = greedy_best_response(game.treeplex(Player::Two), &g2.values)?;
    let y = uniform_sequence_form(game.treeplex(Player::Two));
    // With a pure `x` every opponent sequence ends at most one terminal, so
    // `g2[s]` is `+1` exactly at the opponent's wins. Hex has no draws, so
    // the value is `1 - 2 P(loss)`; this is exact when no loss is reachable.
    let mut loss = 0.0;
    for (g, p) in g2.values.iter().zip(&y.values) {
        debug_assert!(matches!(*g, -1.0 | 0.0 | 1.0));
        if *g > 0.0 {
            loss += p * g;
        }
    }
    Ok(Verification {
        min_value: -br2,
        value_vs_uniform: 1.0 - 2.0 * loss,
    })
}

/// Extra pruning of the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prune {
    /// Only refute an attempt through the opponent's replies.
    #[default]
    CompatibleStates,
    /// Also require the placed piece to keep a won position of the
    /// perfect-information game for every compatible opponent board.
    PerfectInformation,
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    pub prune: Prune,
    /// Restricts player one's first attempt.
    pub first_moves: Option<Vec<u8>>,
    /// Worker threads over first attempts (1 means sequential).
    pub threads: usize,
    /// Permits the 4x4 board.
    pub allow_large: bool,
    /// Records refuted first attempts so that an interrupted run resumes
    /// where it stopped.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub strategy: Option<OrderedActionStrategy>,
    /// Distinct information states decided.
    pub states: u64,
}

/// Searches classical Dark Hex (side up to 3) for a winning strategy.
pub fn search_deterministic_winner(spec: &GameSpec) -> Result<Option<OrderedActionStrategy>> {
    let opts = SearchOptions {
        threads: 1,
        ..Default::default()
    };
    Ok(search_with(spec, &opts)?.strategy)
}

pub fn search_with(spec: &GameSpec, opts: &SearchOptions) -> Result<SearchReport> {
    check_classical_hex(spec)?;
    if spec.side() > 3 && !opts.allow_large {
        return Err(Error::Unsupported(
            "the 4x4 search is a long run and must be enabled explicitly".into(),
        ));
    }
    let rules = Rules::new(*spec);
    let mut done = read_checkpoint(opts)?;
    let firsts: Vec<u8> = cells(rules.full_mask())
        .filter(|c| opts.first_moves.as_ref().is_none_or(|f| f.contains(c)))
        .filter(|c| !done.contains(c))
        .collect();

    let run = |first: u8| {
        let mut s = Search::new(&rules, opts.prune);
        let won = s.attempt(0, 0, &[0], first);
        (won, s)
    };
    let mut states = 0;
    let threads = opts.threads.max(1);
    let mut winner = None;
    if threads == 1 {
        for &c in &firsts {
            let (won, s) = run(c);
            states += s.memo.len() as u64;
            if won {
                winner = Some((c, s));
                break;
            }
            done.push(c);
            write_checkpoint(opts, &done)?;
        }
    } else {
        for chunk in firsts.chunks(threads) {
            let results: Vec<(u8, bool, Search)> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&c| scope.spawn(move || (c, run(c))))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        let (c, (won, s)) = h.join().expect("search worker panicked");
                        (c, won, s)
                    })
                    .collect()
            });
            for (c, won, s) in results {
                states += s.memo.len() as u64;
                if won && winner.is_none() {
                    winner = Some((c, s));
                } else if !won {
                    done.push(c);
                }
            }
            write_checkpoint(opts, &done)?;
            if winner.is_some() {
                break;
            }
        }
    }

    let strategy = winner.map(|(first, mut s)| {
        s.memo.insert((0, 0, vec![0]), Some(first));
        let mut lists = BTreeMap::new();
        s.export(0, 0, vec![0], InfoStateKey::root(Player::One), &mut lists);
        OrderedActionStrategy { lists }
    });
    Ok(SearchReport { strategy, states })
}

fn read_checkpoint(opts: &SearchOptions) -> Result<Vec<u8>> {
    let Some(path) = &opts.checkpoint else {
        return Ok(Vec::new());
    };
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .strip_prefix("refuted ")
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Format(format!("checkpoint line `{l}`")))
        })
        .collect()
}

fn write_checkpoint(opts: &SearchOptions, refuted: &[u8]) -> Result<()> {
    if let Some(path) = &opts.checkpoint {
        let text: String = refuted.iter().map(|c| format!("refuted {c}\n")).collect();
        std::fs::write(path, text)?;
    }
    Ok(())
}

/// Own pieces, revealed opponent cells and the compatible opponent boards.
type Node = (CellMask, CellMask, Vec<CellMask>);

struct Search<'a> {
    rules: &'a Rules,
    prune: Prune,
    /// Winning attempt of every decided information state, `None` if lost.
    memo: HashMap<Node, Option<u8>>,
    perfect: HashMap<u32, bool>,
}

impl<'a> Search<'a> {
    fn new(rules: &'a Rules, prune: Prune) -> Self {
        Self {
            rules,
            prune,
            memo: HashMap::new(),
            perfect: HashMap::new(),
        }
    }

    fn wins(&mut self, mine: CellMask, known: CellMask, worlds: Vec<CellMask>) -> bool {
        let node = (mine, known, worlds);
        if let Some(r) = self.memo.get(&node) {
            return r.is_some();
        }
        let (mine, known, worlds) = node;
        let mut choice = None;
        for a in cells(self.rules.full & !mine & !known) {
            if self.attempt(mine, known, &worlds, a) {
                choice = Some(a);
                break;
            }
        }
        self.memo.insert((mine, known, worlds), choice);
        choice.is_some()
    }

    /// Whether attempting `a` wins against every opponent.
    fn attempt(&mut self, mine: CellMask, known: CellMask, worlds: &[CellMask], a: u8) -> bool {
        let b = bit(a);
        let placed = mine | b;
        let (hit, miss): (Vec<CellMask>, Vec<CellMask>) = worlds.iter().partition(|&&w| w & b != 0);
        if !miss.is_empty() && !self.rules.wins(0, placed) {
            if self.prune == Prune::PerfectInformation
                && !miss.iter().all(|&w| self.perfect_win(placed, w, false))
            {
                return false;
            }
            let Some(next) = self.replies(placed, &miss) else {
                return false;
            };
            if !self.wins(placed, known, next) {
                return false;
            }
        }
        hit.is_empty() || self.wins(mine, known | b, hit)
    }

    /// Opponent boards after one opponent turn, or `None` if some reply
    /// wins for the opponent.
    fn replies(&self, mine: CellMask, worlds: &[CellMask]) -> Option<Vec<CellMask>> {
        let mut next = Vec::new();
        for &w in worlds {
            let empty = self.rules.full & !mine & !w;
            if empty == 0 {
                return None;
            }
            for c in cells(empty) {
                let nw = w | bit(c);
                if self.rules.wins(1, nw) {
                    return None;
                }
                next.push(nw);
            }
        }
        next.sort_unstable();
        next.dedup();
        Some(next)
    }

    /// Perfect-information Hex: does player one win from this board?
    fn perfect_win(&mut self, p1: CellMask, p2: CellMask, p1_to_move: bool) -> bool {
        let key = p1 as u32 | (p2 as u32) << 16;
        let key = if p1_to_move { key } else { !key };
        if let Some(&v) = self.perfect.get(&key) {
            return v;
        }
        let empty = self.rules.full & !p1 & !p2;
        let v = if p1_to_move {
            cells(empty).any(|c| {
                let n = p1 | bit(c);
                self.rules.wins(0, n) || self.perfect_win(n, p2, false)
            })
        } else {
            cells(empty).all(|c| {
                let n = p2 | bit(c);
                !self.rules.wins(1, n) && self.perfect_win(p1, n, true)
            })
        };
        self.perfect.insert(key, v);
        v
    }

    /// Collects the attempt lists of the strategy found below a turn start.
    fn export(
        &self,
        mine: CellMask,
        known: CellMask,
        worlds: Vec<CellMask>,
        key: InfoStateKey,
        out: &mut BTreeMap<InfoStateKey, Vec<Action>>,
    ) {
        let mut list = Vec::new();
        let (mut known, mut worlds, mut at) = (known, worlds, key.clone());
        loop {
            let node = (mine, known, worlds);
            let a = self.memo[&node].expect("exported states are won");
            let (_, k, w) = node;
            (known, worlds) = (k, w);
            list.push(Action(a));
            let b = bit(a);
            let (hit, miss): (Vec<CellMask>, Vec<CellMask>) = worlds.iter().partition(|&&w| w & b != 0);
            let placed = mine | b;
            if !miss.is_empty() && !self.rules.wins(0, placed) {
                let next = self.replies(placed, &miss).expect("won attempts leave no winning reply");
                self.export(placed, known, next, at.child(Action(a), MoveOutcome::Placed), out);
            }
            if hit.is_empty() {
                break;
            }
            at = at.child(Action(a), MoveOutcome::Occupied);
            known |= b;
            worlds = hit;
        }
        out.insert(key, list);
    }
}
