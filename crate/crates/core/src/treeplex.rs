//! Sequence-form decision structure of one player.
//!
//! Information states are discovered by a depth-first walk over the
//! player's own attempts. Next to each information state the walk carries
//! the set of opponent configurations compatible with it, which is what
//! decides whether an extension of the key can actually occur. Information
//! states are stored in discovery (pre)order: parents come before children,
//! so a reverse sweep visits children first. Each information state owns a
//! contiguous block of sequence ids; sequence 0 is the empty sequence.

use crate::error::{Error, Result};
use crate::games::{bit, cells, Action, CellMask, GameSpec, InfoStateKey, MoveOutcome, Player, Rules};

pub const NO_INFOSET: u32 = u32::MAX;
pub type SequenceId = u32;

/// Flow-conservation residual tolerated after conversion.
pub const FLOW_TOLERANCE: f64 = 1e-12;
/// Distributions within this distance of summing to one are renormalised.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infoset {
    pub parent_sequence: SequenceId,
    pub first_sequence: SequenceId,
    pub legal: CellMask,
    /// Outcome of the parent sequence's attempt that led here.
    pub via: MoveOutcome,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.legal.count_ones() as usize
    }

    pub fn sequences(&self) -> std::ops::Range<usize> {
        let first = self.first_sequence as usize;
        first..first + self.num_actions()
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> {
        cells(self.legal).map(Action)
    }
}

#[derive(Debug, Clone)]
pub struct Treeplex {
    spec: GameSpec,
    player: Player,
    infosets: Vec<Infoset>,
    /// Infoset owning each sequence (`NO_INFOSET` for the empty sequence).
    seq_infoset: Vec<u32>,
    seq_action: Vec<u8>,
    /// Next information state of the owner after the attempt, indexed by
    /// [`MoveOutcome`]; `NO_INFOSET` when the owner never acts again.
    children: Vec<[u32; 2]>,
}

/// Compatible opponent configuration as seen from one player's infoset:
/// opponent pieces in the low 16 bits; under the abrupt ruleset the number
/// of turns the opponent has forfeited by bumping into our pieces sits
/// above. Which of our pieces the opponent has bumped into never changes
/// what we can observe, so it is not tracked.
type World = u32;

#[inline]
fn world_pieces(w: World) -> CellMask {
    w as CellMask
}

#[inline]
fn world_bumps(w: World) -> u32 {
    w >> 16
}

struct Builder<'a> {
    rules: &'a Rules,
    me: usize,
    infosets: Vec<Infoset>,
    seq_infoset: Vec<u32>,
    seq_action: Vec<u8>,
    children: Vec<[u32; 2]>,
}

impl Builder<'_> {
    /// All configurations after one opponent turn that do not end the game.
    fn opponent_turn(&self, mine: CellMask, worlds: &[World], out: &mut Vec<World>) {
        let rules = self.rules;
        let opp = 1 - self.me;
        out.clear();
        for &w in worlds {
            let theirs = world_pieces(w);
            if !rules.classical && world_bumps(w) < mine.count_ones() {
                out.push(w + (1 << 16));
            }
            for b in cells(rules.full & !mine & !theirs) {
                let next = theirs | bit(b);
                if rules.wins(opp, next) || next | mine == rules.full {
                    continue;
                }
                out.push((w & !0xffff) | next as u32);
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    fn visit(
        &mut self,
        mine: CellMask,
        known: CellMask,
        worlds: Vec<World>,
        parent: SequenceId,
        via: MoveOutcome,
    ) -> u32 {
        let rules = self.rules;
        let legal = rules.full & !mine & !known;
        let id = self.infosets.len() as u32;
        let first = self.seq_infoset.len() as SequenceId;
        self.infosets.push(Infoset {
            parent_sequence: parent,
            first_sequence: first,
            legal,
            via,
        });
        for c in cells(legal) {
            self.seq_infoset.push(id);
            self.seq_action.push(c);
            self.children.push([NO_INFOSET; 2]);
        }
        let mut scratch = Vec::new();
        for (k, c) in cells(legal).enumerate() {
            let seq = first + k as SequenceId;
            let b = bit(c);
            let (hit, miss): (Vec<World>, Vec<World>) =
                worlds.iter().partition(|&&w| world_pieces(w) & b != 0);

            if !hit.is_empty() {
                let next = if rules.classical {
                    hit
                } else {
                    self.opponent_turn(mine, &hit, &mut scratch);
                    std::mem::take(&mut scratch)
                };
                if !next.is_empty() {
                    let child = self.visit(mine, known | b, next, seq, MoveOutcome::Occupied);
                    self.children[seq as usize][MoveOutcome::Occupied as usize] = child;
                }
            }

            let placed = mine | b;
            if !miss.is_empty() && !rules.wins(self.me, placed) {
                let open: Vec<World> = miss
                    .into_iter()
                    .filter(|&w| world_pieces(w) | placed != rules.full)
                    .collect();
                self.opponent_turn(placed, &open, &mut scratch);
                if !scratch.is_empty() {
                    let next = std::mem::take(&mut scratch);
                    let child = self.visit(placed, known, next, seq, MoveOutcome::Placed);
                    self.children[seq as usize][MoveOutcome::Placed as usize] = child;
                }
            }
        }
        id
    }
}

impl Treeplex {
    /// Enumerates every information state at which `player` acts.
    pub fn build(spec: &GameSpec, player: Player) -> Result<Treeplex> {
        if spec.num_cells() > 9 {
            return Err(Error::UnsupportedBoard(spec.side()));
        }
        let rules = Rules::new(*spec);
        Ok(Self::build_with(&rules, player))
    }

    pub(crate) fn build_with(rules: &Rules, player: Player) -> Treeplex {
        let mut b = Builder {
            rules,
            me: player.index(),
            infosets: Vec::new(),
            seq_infoset: vec![NO_INFOSET],
            seq_action: vec![u8::MAX],
            children: vec![[NO_INFOSET; 2]],
        };
        let worlds = match player {
            Player::One => vec![0],
            Player::Two => {
                // player one's first placement, seen from player two
                let mut w = Vec::new();
                for c in cells(rules.full) {
                    if !rules.wins(0, bit(c)) && bit(c) != rules.full {
                        w.push(bit(c) as World);
                    }
                }
                w
            }
        };
        if !worlds.is_empty() {
            let root = b.visit(0, 0, worlds, 0, MoveOutcome::Placed);
            b.children[0][MoveOutcome::Placed as usize] = root;
        }
        Treeplex {
            spec: *rules.spec(),
            player,
            infosets: b.infosets,
            seq_infoset: b.seq_infoset,
            seq_action: b.seq_action,
            children: b.children,
        }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn num_sequences(&self) -> usize {
        self.seq_infoset.len()
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, id: u32) -> &Infoset {
        &self.infosets[id as usize]
    }

    /// Owning infoset of a non-root sequence.
    pub fn sequence_infoset(&self, seq: SequenceId) -> Option<u32> {
        match self.seq_infoset[seq as usize] {
            NO_INFOSET => None,
            i => Some(i),
        }
    }

    pub fn sequence_action(&self, seq: SequenceId) -> Option<Action> {
        self.sequence_infoset(seq)
            .map(|_| Action(self.seq_action[seq as usize]))
    }

    /// Infoset reached after the attempt of `seq` produced `outcome`.
    #[inline]
    pub fn child(&self, seq: SequenceId, outcome: MoveOutcome) -> Option<u32> {
        match self.children[seq as usize][outcome as usize] {
            NO_INFOSET => None,
            i => Some(i),
        }
    }

    #[inline]
    pub(crate) fn children_raw(&self) -> &[[u32; 2]] {
        &self.children
    }

    /// First information state of the player, if they ever act.
    pub fn root_infoset(&self) -> Option<u32> {
        self.child(0, MoveOutcome::Placed)
    }

    /// Sequence of `action` at `infoset`.
    pub fn sequence_of(&self, infoset: u32, action: Action) -> Option<SequenceId> {
        let info = self.infoset(infoset);
        if action.0 >= 16 || info.legal & bit(action.0) == 0 {
            return None;
        }
        let rank = (info.legal & (bit(action.0) - 1)).count_ones();
        Some(info.first_sequence + rank)
    }

    pub fn key(&self, infoset: u32) -> InfoStateKey {
        let mut tokens = Vec::new();
        let mut id = infoset;
        loop {
            let info = self.infoset(id);
            let parent = info.parent_sequence;
            if parent == 0 {
                break;
            }
            tokens.push((Action(self.seq_action[parent as usize]), info.via));
            id = self.seq_infoset[parent as usize];
        }
        tokens.reverse();
        InfoStateKey {
            player: self.player,
            tokens,
        }
    }

    pub fn find(&self, key: &InfoStateKey) -> Option<u32> {
        if key.player != self.player {
            return None;
        }
        let mut id = self.root_infoset()?;
        for &(a, o) in &key.tokens {
            let seq = self.sequence_of(id, a)?;
            id = self.child(seq, o)?;
        }
        Some(id)
    }

    /// Infosets in preorder together with their keys, without storing all
    /// keys at once.
    pub fn for_each_key(&self, mut f: impl FnMut(u32, &InfoStateKey)) {
        let Some(root) = self.root_infoset() else {
            return;
        };
        let mut key = InfoStateKey::root(self.player);
        self.walk_keys(root, &mut key, &mut f);
    }

    fn walk_keys(&self, id: u32, key: &mut InfoStateKey, f: &mut impl FnMut(u32, &InfoStateKey)) {
        f(id, key);
        let info = *self.infoset(id);
        for (seq, a) in info.sequences().zip(info.actions()) {
            for outcome in [MoveOutcome::Occupied, MoveOutcome::Placed] {
                if let Some(child) = self.child(seq as SequenceId, outcome) {
                    key.tokens.push((a, outcome));
                    self.walk_keys(child, key, f);
                    key.tokens.pop();
                }
            }
        }
    }

    /// Approximate heap footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.infosets.len() * std::mem::size_of::<Infoset>()
            + self.seq_infoset.len() * (4 + 1 + 8)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_sequences() {
            return Err(Error::DimensionMismatch {
                expected: self.num_sequences(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Reach probabilities of one player's sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFormStrategy {
    pub player: Player,
    pub values: Vec<f64>,
}

impl SequenceFormStrategy {
    /// Largest flow-conservation violation over all infosets.
    pub fn flow_residual(&self, tp: &Treeplex) -> f64 {
        let v = &self.values;
        let mut worst = (v[0] - 1.0).abs();
        for info in tp.infosets() {
            let sum: f64 = v[info.sequences()].iter().sum();
            worst = worst.max((sum - v[info.parent_sequence as usize]).abs());
        }
        worst
    }

    pub fn dot(&self, g: &[f64]) -> f64 {
        self.values.iter().zip(g).map(|(a, b)| a * b).sum()
    }

    /// Behavioural probabilities (indexed by sequence). Infosets with zero
    /// reach get the uniform distribution.
    pub fn to_tabular(&self, tp: &Treeplex) -> TabularPolicy {
        let mut probs = vec![0.0; tp.num_sequences()];
        probs[0] = 1.0;
        for info in tp.infosets() {
            let reach = self.values[info.parent_sequence as usize];
            let range = info.sequences();
            let n = range.len() as f64;
            let total: f64 = self.values[range.clone()].iter().sum();
            if reach > 0.0 && total > 0.0 {
                for s in range {
                    probs[s] = self.values[s] / total;
                }
            } else {
                for s in range {
                    probs[s] = 1.0 / n;
                }
            }
        }
        TabularPolicy {
            player: tp.player(),
            probs,
        }
    }
}

/// A policy answering queries by information state.
///
/// `out` has one slot per legal action, in ascending cell order.
pub trait BehavioralPolicy {
    fn action_probabilities(&self, key: &InfoStateKey, legal: &[Action], out: &mut [f64]) -> Result<()>;

    /// Fast path for policies stored per sequence of a known treeplex.
    fn as_tabular(&self) -> Option<&TabularPolicy> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl BehavioralPolicy for UniformPolicy {
    fn action_probabilities(&self, _key: &InfoStateKey, legal: &[Action], out: &mut [f64]) -> Result<()> {
        out.fill(1.0 / legal.len() as f64);
        Ok(())
    }
}

/// Any closure from key and legal actions to a distribution.
pub struct FnPolicy<F>(pub F);

impl<F> BehavioralPolicy for FnPolicy<F>
where
    F: Fn(&InfoStateKey, &[Action]) -> Vec<f64>,
{
    fn action_probabilities(&self, key: &InfoStateKey, legal: &[Action], out: &mut [f64]) -> Result<()> {
        let v = (self.0)(key, legal);
        if v.len() != out.len() {
            return Err(Error::BadDistribution {
                key: key.to_string(),
                reason: format!("{} probabilities for {} actions", v.len(), out.len()),
            });
        }
        out.copy_from_slice(&v);
        Ok(())
    }
}

/// Dense behavioural policy over a treeplex: entry `s` is the probability
/// of the action of sequence `s` at its infoset.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    pub player: Player,
    pub probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn uniform(tp: &Treeplex) -> Self {
        let mut probs = vec![1.0; tp.num_sequences()];
        for info in tp.infosets() {
            let n = info.num_actions() as f64;
            probs[info.sequences()].fill(1.0 / n);
        }
        Self {
            player: tp.player(),
            probs,
        }
    }

    /// Materialises any policy on the treeplex.
    pub fn from_policy(tp: &Treeplex, pi: &dyn BehavioralPolicy) -> Result<Self> {
        if let Some(t) = pi.as_tabular() {
            tp.check_len(t.probs.len())?;
            return Ok(t.clone());
        }
        let mut probs = vec![1.0; tp.num_sequences()];
        let mut err = None;
        let mut legal = Vec::with_capacity(16);
        tp.for_each_key(|id, key| {
            if err.is_some() {
                return;
            }
            let info = tp.infoset(id);
            legal.clear();
            legal.extend(info.actions());
            let out = &mut probs[info.sequences()];
            if let Err(e) = pi
                .action_probabilities(key, &legal, out)
                .and_then(|_| normalize(key, out))
            {
                err = Some(e);
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(Self {
                player: tp.player(),
                probs,
            }),
        }
    }

    pub fn distribution<'a>(&'a self, tp: &Treeplex, infoset: u32) -> &'a [f64] {
        &self.probs[tp.infoset(infoset).sequences()]
    }
}

impl BehavioralPolicy for TabularPolicy {
    fn action_probabilities(&self, _key: &InfoStateKey, _legal: &[Action], _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported(
            "tabular policies are only queried through their treeplex".into(),
        ))
    }

    fn as_tabular(&self) -> Option<&TabularPolicy> {
        Some(self)
    }
}

/// A tabular policy paired with its treeplex, so that it can also be
/// queried by key.
#[derive(Debug, Clone, Copy)]
pub struct BoundPolicy<'a> {
    pub treeplex: &'a Treeplex,
    pub table: &'a TabularPolicy,
}

impl BehavioralPolicy for BoundPolicy<'_> {
    fn action_probabilities(&self, key: &InfoStateKey, legal: &[Action], out: &mut [f64]) -> Result<()> {
        let id = self
            .treeplex
            .find(key)
            .ok_or_else(|| Error::BadKey(key.to_string()))?;
        let info = self.treeplex.infoset(id);
        if !info.actions().eq(legal.iter().copied()) || out.len() != legal.len() {
            return Err(Error::BadDistribution {
                key: key.to_string(),
                reason: "legal actions disagree with the treeplex".into(),
            });
        }
        out.copy_from_slice(&self.table.probs[info.sequences()]);
        Ok(())
    }

    fn as_tabular(&self) -> Option<&TabularPolicy> {
        Some(self.table)
    }
}

/// Validates a distribution, renormalising small drift.
pub(crate) fn normalize(key: &InfoStateKey, probs: &mut [f64]) -> Result<()> {
    let bad = |reason: String| Error::BadDistribution {
        key: key.to_string(),
        reason,
    };
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(bad(format!("entry {p}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(bad(format!("sums to {sum}")));
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

/// Sequence-form vector of a behavioural policy.
pub fn to_sequence_form(tp: &Treeplex, pi: &dyn BehavioralPolicy) -> Result<SequenceFormStrategy> {
    let table = TabularPolicy::from_policy(tp, pi)?;
    Ok(tabular_to_sequence_form(tp, &table))
}

pub fn tabular_to_sequence_form(tp: &Treeplex, table: &TabularPolicy) -> SequenceFormStrategy {
    let mut values = vec![0.0; tp.num_sequences()];
    values[0] = 1.0;
    // preorder: the parent sequence is final before its children are set
    for info in tp.infosets() {
        let reach = values[info.parent_sequence as usize];
        for s in info.sequences() {
            values[s] = reach * table.probs[s];
        }
    }
    SequenceFormStrategy {
        player: tp.player(),
        values,
    }
}

pub fn uniform_sequence_form(tp: &Treeplex) -> SequenceFormStrategy {
    tabular_to_sequence_form(tp, &TabularPolicy::uniform(tp))
}

/// Value of each infoset under the best local choices, children first.
pub(crate) fn best_infoset_values(tp: &Treeplex, g: &[f64]) -> Vec<f64> {
    let children = tp.children_raw();
    let mut value = vec![0.0; tp.num_infosets()];
    let child_value = |value: &[f64], c: u32| if c == NO_INFOSET { 0.0 } else { value[c as usize] };
    for id in (0..tp.num_infosets()).rev() {
        let info = tp.infosets()[id];
        let mut best = f64::NEG_INFINITY;
        for s in info.sequences() {
            let [p, o] = children[s];
            let v = g[s] + child_value(&value, p) + child_value(&value, o);
            if v > best {
                best = v;
            }
        }
        value[id] = best;
    }
    value
}

/// Maximises `x . g` over the player's strategy polytope. Ties go to the
/// lowest action.
pub fn greedy_best_response(tp: &Treeplex, g: &[f64]) -> Result<(SequenceFormStrategy, f64)> {
    tp.check_len(g.len())?;
    let value = best_infoset_values(tp, g);
    let children = tp.children_raw();
    let child_value = |c: u32| if c == NO_INFOSET { 0.0 } else { value[c as usize] };

    let mut x = vec![0.0; tp.num_sequences()];
    x[0] = 1.0;
    for info in tp.infosets() {
        let reach = x[info.parent_sequence as usize];
        if reach == 0.0 {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = info.first_sequence as usize;
        for s in info.sequences() {
            let [p, o] = children[s];
            let v = g[s] + child_value(p) + child_value(o);
            if v > best {
                best = v;
                arg = s;
            }
        }
        x[arg] = reach;
    }
    let total = g[0] + tp.root_infoset().map_or(0.0, |r| value[r as usize]);
    let strategy = SequenceFormStrategy {
        player: tp.player(),
        values: x,
    };
    debug_assert!((strategy.dot(g) - total).abs() <= 1e-9 * (1.0 + total.abs()));
    Ok((strategy, total))
}
