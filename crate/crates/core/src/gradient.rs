//! Sequence-form payoff products computed by walking the game tree.
//!
//! The payoff matrix `A` is never stored: `A[s1, s2]` is the sum of
//! player-one payoffs of terminal histories whose last sequences are `s1`
//! and `s2`, and both `A y` and `-A^T x` are accumulated terminal by
//! terminal during one walk.
//!
//! The walk is cut into tasks by the two opening attempts `(a, b)`. Task
//! `(a, b)` only touches player one's sequences under `a` and player two's
//! sequences under `b`, so every task writes into a private buffer and the
//! buffers are folded into the result strictly in task order. The result
//! is therefore bit-identical for any number of worker threads.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use crate::error::{Error, Result};
use crate::games::{cells, Action, GameSpec, MoveOutcome, Player, Position, Rules, Step};
use crate::treeplex::{
    greedy_best_response, tabular_to_sequence_form, BehavioralPolicy, Infoset, SequenceFormStrategy, TabularPolicy,
    Treeplex, NO_INFOSET,
};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "DARKGAMES_THREADS";

/// `g1 = A y` or `g2 = -A^T x`, indexed by the owner's sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub player: Player,
    pub values: Vec<f64>,
}

/// Sequences written by the tasks opening with one particular attempt:
/// the attempt's own sequence plus the contiguous block of its descendants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub head: u32,
    pub tail: Range<u32>,
}

impl Region {
    pub fn contains(&self, seq: u32) -> bool {
        seq == self.head || self.tail.contains(&seq)
    }

    fn for_each(&self, mut f: impl FnMut(usize)) {
        f(self.head as usize);
        for s in self.tail.clone() {
            f(s as usize);
        }
    }
}

/// One unit of parallel work: player one's first attempt and, unless the
/// game ends right away, player two's first attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpeningTask {
    pub first: u8,
    pub reply: Option<u8>,
}

/// Write regions per opening attempt and the task list.
#[derive(Debug, Clone)]
pub struct OpeningPartition {
    /// Indexed by the rank of the attempt among the root's legal cells.
    pub regions: [Vec<Region>; 2],
    pub tasks: Vec<OpeningTask>,
}

impl OpeningPartition {
    fn new(rules: &Rules, tps: &[Treeplex; 2]) -> Self {
        let regions = [region_list(&tps[0]), region_list(&tps[1])];
        let mut tasks = Vec::new();
        for a in cells(rules.full) {
            let (_, step) = Position::INITIAL.step(rules, a);
            match step {
                Step::Terminal(..) => tasks.push(OpeningTask { first: a, reply: None }),
                Step::Continue(pos) => {
                    for b in cells(pos.legal_mask(rules)) {
                        tasks.push(OpeningTask {
                            first: a,
                            reply: Some(b),
                        });
                    }
                }
            }
        }
        Self { regions, tasks }
    }

    /// Region of player `p`'s opening attempt at `cell`.
    pub fn region(&self, p: Player, cell: u8) -> &Region {
        // the root infoset of either player has every cell legal
        &self.regions[p.index()][cell as usize]
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

fn region_list(tp: &Treeplex) -> Vec<Region> {
    let Some(root) = tp.root_infoset() else {
        return Vec::new();
    };
    let info = *tp.infoset(root);
    let seqs: Vec<u32> = info.sequences().map(|s| s as u32).collect();
    let end_of_root = info.first_sequence + seqs.len() as u32;
    let mut starts: Vec<u32> = seqs
        .iter()
        .map(|&s| {
            // first descendant sequence, if any, is the first sequence of
            // the earliest child infoset
            [MoveOutcome::Occupied, MoveOutcome::Placed]
                .iter()
                .filter_map(|&o| tp.child(s, o))
                .map(|c| tp.infoset(c).first_sequence)
                .min()
                .unwrap_or(u32::MAX)
        })
        .collect();
    // children are allocated in action order, so blocks tile the rest
    let mut next_start = tp.num_sequences() as u32;
    let mut regions = vec![Region { head: 0, tail: 0..0 }; seqs.len()];
    for i in (0..seqs.len()).rev() {
        let start = if starts[i] == u32::MAX { next_start } else { starts[i] };
        regions[i] = Region {
            head: seqs[i],
            tail: start..next_start,
        };
        next_start = start;
        starts[i] = start;
    }
    debug_assert_eq!(next_start, end_of_root);
    regions
}

/// A game together with both treeplexes: everything needed to evaluate
/// strategy profiles.
pub struct Game {
    rules: Rules,
    treeplexes: [Treeplex; 2],
    partition: OpeningPartition,
    threads: usize,
}

/// Which products a walk accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Want {
    Both,
    One,
    Two,
}

impl Game {
    pub fn new(spec: &GameSpec) -> Result<Self> {
        if spec.num_cells() > 9 {
            return Err(Error::UnsupportedBoard(spec.side()));
        }
        let rules = Rules::new(*spec);
        let treeplexes = [
            Treeplex::build_with(&rules, Player::One),
            Treeplex::build_with(&rules, Player::Two),
        ];
        let partition = OpeningPartition::new(&rules, &treeplexes);
        Ok(Self {
            rules,
            treeplexes,
            partition,
            threads: default_threads(),
        })
    }

    /// Worker threads used by gradient walks (at least one).
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn set_threads(&mut self, threads: usize) {
        self.threads = threads.max(1);
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn spec(&self) -> &GameSpec {
        self.rules.spec()
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn treeplex(&self, p: Player) -> &Treeplex {
        &self.treeplexes[p.index()]
    }

    pub fn partition(&self) -> &OpeningPartition {
        &self.partition
    }

    fn check(&self, s: &SequenceFormStrategy, p: Player) -> Result<()> {
        let expected = self.treeplex(p).num_sequences();
        if s.player != p || s.values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: s.values.len(),
            });
        }
        Ok(())
    }

    /// Both gradients: `g1 = A y`, `g2 = -A^T x`.
    pub fn gradients(
        &self,
        x: &SequenceFormStrategy,
        y: &SequenceFormStrategy,
    ) -> Result<(GradientVector, GradientVector)> {
        self.check(x, Player::One)?;
        self.check(y, Player::Two)?;
        let [g1, g2] = self.run(&x.values, &y.values, Want::Both, false);
        Ok((
            GradientVector {
                player: Player::One,
                values: g1,
            },
            GradientVector {
                player: Player::Two,
                values: g2,
            },
        ))
    }

    /// Like [`Game::gradients`] but asserts that every task writes inside
    /// its own two regions.
    pub fn gradients_checked(
        &self,
        x: &SequenceFormStrategy,
        y: &SequenceFormStrategy,
    ) -> Result<(GradientVector, GradientVector)> {
        self.check(x, Player::One)?;
        self.check(y, Player::Two)?;
        let [g1, g2] = self.run(&x.values, &y.values, Want::Both, true);
        Ok((
            GradientVector {
                player: Player::One,
                values: g1,
            },
            GradientVector {
                player: Player::Two,
                values: g2,
            },
        ))
    }

    /// `A y` alone. Subtrees where `y` has no mass are skipped.
    pub fn gradient_p1(&self, y: &SequenceFormStrategy) -> Result<GradientVector> {
        self.check(y, Player::Two)?;
        let x = vec![0.0; 0];
        let [g1, _] = self.run(&x, &y.values, Want::One, false);
        Ok(GradientVector {
            player: Player::One,
            values: g1,
        })
    }

    /// `-A^T x` alone.
    pub fn gradient_p2(&self, x: &SequenceFormStrategy) -> Result<GradientVector> {
        self.check(x, Player::One)?;
        let y = vec![0.0; 0];
        let [_, g2] = self.run(&x.values, &y, Want::Two, false);
        Ok(GradientVector {
            player: Player::Two,
            values: g2,
        })
    }

    /// Player-one expected payoff `x^T A y`.
    pub fn expected_value(&self, x: &SequenceFormStrategy, y: &SequenceFormStrategy) -> Result<f64> {
        self.check(x, Player::One)?;
        let g1 = self.gradient_p1(y)?;
        Ok(x.dot(&g1.values))
    }

    /// Sum of both best-response values against the profile; zero exactly
    /// at equilibrium.
    pub fn nash_gap(&self, x: &SequenceFormStrategy, y: &SequenceFormStrategy) -> Result<f64> {
        Ok(self.evaluate(x, y)?.nash_gap)
    }

    /// Value, best-response values and gap from a single walk.
    pub fn evaluate(&self, x: &SequenceFormStrategy, y: &SequenceFormStrategy) -> Result<Evaluation> {
        let (g1, g2) = self.gradients(x, y)?;
        Ok(self.evaluate_from(x, &g1, &g2))
    }

    pub(crate) fn evaluate_from(
        &self,
        x: &SequenceFormStrategy,
        g1: &GradientVector,
        g2: &GradientVector,
    ) -> Evaluation {
        let (_, br1) = greedy_best_response(self.treeplex(Player::One), &g1.values).expect("sized by treeplex");
        let (_, br2) = greedy_best_response(self.treeplex(Player::Two), &g2.values).expect("sized by treeplex");
        let value = x.dot(&g1.values);
        Evaluation {
            value,
            best_response: [br1, br2],
            nash_gap: br1 + br2,
        }
    }

    pub fn sequence_form(&self, p: Player, pi: &dyn BehavioralPolicy) -> Result<SequenceFormStrategy> {
        let tp = self.treeplex(p);
        let table = TabularPolicy::from_policy(tp, pi)?;
        Ok(tabular_to_sequence_form(tp, &table))
    }

    /// Half the Nash gap: the average advantage of a best responder playing
    /// each seat once.
    pub fn exploitability(&self, pi1: &dyn BehavioralPolicy, pi2: &dyn BehavioralPolicy) -> Result<f64> {
        let x = self.sequence_form(Player::One, pi1)?;
        let y = self.sequence_form(Player::Two, pi2)?;
        Ok(self.nash_gap(&x, &y)? / 2.0)
    }

    /// Expected player-one payoff when `pi1` plays first against `pi2`.
    pub fn head_to_head(&self, pi1: &dyn BehavioralPolicy, pi2: &dyn BehavioralPolicy) -> Result<f64> {
        let x = self.sequence_form(Player::One, pi1)?;
        let y = self.sequence_form(Player::Two, pi2)?;
        self.expected_value(&x, &y)
    }

    /// Average return of agent `a` against agent `b` when each seat is
    /// taken half of the time. Each agent is a pair of per-seat policies.
    pub fn symmetrized_value(
        &self,
        a: (&dyn BehavioralPolicy, &dyn BehavioralPolicy),
        b: (&dyn BehavioralPolicy, &dyn BehavioralPolicy),
    ) -> Result<f64> {
        let first = self.head_to_head(a.0, b.1)?;
        let second = self.head_to_head(b.0, a.1)?;
        Ok((first - second) / 2.0)
    }

    fn run(&self, x: &[f64], y: &[f64], want: Want, check: bool) -> [Vec<f64>; 2] {
        let sizes = [
            self.treeplexes[0].num_sequences(),
            self.treeplexes[1].num_sequences(),
        ];
        let mut out = [vec![0.0; sizes[0]], vec![0.0; sizes[1]]];
        let tasks = &self.partition.tasks;
        let workers = self.threads.min(tasks.len()).max(1);
        let commit = Mutex::new(Commit {
            next: 0,
            out: &mut out,
        });
        let turn = Condvar::new();
        let counter = AtomicUsize::new(0);
        let ctx = WalkCtx {
            rules: &self.rules,
            tps: &self.treeplexes,
            x,
            y,
        };

        let work = || {
            let mut scratch = [vec![0.0; sizes[0]], vec![0.0; sizes[1]]];
            loop {
                let i = counter.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let task = tasks[i];
                let regions = self.task_regions(task);
                let [s1, s2] = &mut scratch;
                ctx.run_task(task, want, s1, s2, check.then_some(&regions));

                let mut guard = commit.lock().unwrap_or_else(|e| e.into_inner());
                while guard.next != i {
                    guard = turn.wait(guard).unwrap_or_else(|e| e.into_inner());
                }
                for (p, region) in regions.iter().enumerate() {
                    let (dst, src) = (&mut guard.out[p], &mut scratch[p]);
                    // the empty sequence collects terminals reached before
                    // the owner ever acts
                    dst[0] += src[0];
                    src[0] = 0.0;
                    if let Some(region) = region {
                        region.for_each(|s| {
                            dst[s] += src[s];
                            src[s] = 0.0;
                        });
                    }
                }
                guard.next += 1;
                drop(guard);
                turn.notify_all();
            }
        };

        if workers == 1 {
            work();
        } else {
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(work);
                }
            });
        }
        out
    }

    /// Runs a slice of the opening tasks on the calling thread, for timing.
    #[doc(hidden)]
    pub fn run_tasks_for_timing(
        &self,
        x: &SequenceFormStrategy,
        y: &SequenceFormStrategy,
        tasks: Range<usize>,
    ) -> Result<f64> {
        self.check(x, Player::One)?;
        self.check(y, Player::Two)?;
        let ctx = WalkCtx {
            rules: &self.rules,
            tps: &self.treeplexes,
            x: &x.values,
            y: &y.values,
        };
        let mut g1 = vec![0.0; x.values.len()];
        let mut g2 = vec![0.0; y.values.len()];
        for &task in &self.partition.tasks[tasks] {
            ctx.run_task(task, Want::Both, &mut g1, &mut g2, None);
        }
        Ok(g1.iter().sum::<f64>() + g2.iter().sum::<f64>())
    }

    fn task_regions(&self, task: OpeningTask) -> [Option<Region>; 2] {
        [
            Some(self.partition.region(Player::One, task.first).clone()),
            task.reply
                .map(|b| self.partition.region(Player::Two, b).clone()),
        ]
    }
}

struct Commit<'a> {
    next: usize,
    out: &'a mut [Vec<f64>; 2],
}

/// Profile evaluation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Player-one expected payoff.
    pub value: f64,
    /// `max x^T g1` and `max y^T g2`.
    pub best_response: [f64; 2],
    pub nash_gap: f64,
}

impl Evaluation {
    pub fn exploitability(&self) -> f64 {
        self.nash_gap / 2.0
    }
}

pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct WalkCtx<'a> {
    rules: &'a Rules,
    tps: &'a [Treeplex; 2],
    x: &'a [f64],
    y: &'a [f64],
}

/// Walker state: both boards, plus each player's last sequence, its reach
/// and the next information state.
#[derive(Clone, Copy)]
struct Node {
    pieces: [u16; 2],
    seq: [u32; 2],
    next: [u32; 2],
    reach: [f64; 2],
}

impl WalkCtx<'_> {
    fn run_task(
        &self,
        task: OpeningTask,
        want: Want,
        g1: &mut [f64],
        g2: &mut [f64],
        regions: Option<&[Option<Region>; 2]>,
    ) {
        let c = self.rules.classical;
        let check = regions.is_some();
        macro_rules! go {
            ($c:literal, $w1:literal, $w2:literal, $chk:literal) => {
                self.start::<$c, $w1, $w2, $chk>(task, g1, g2, regions)
            };
        }
        match (c, want, check) {
            (true, Want::Both, false) => go!(true, true, true, false),
            (true, Want::One, false) => go!(true, true, false, false),
            (true, Want::Two, false) => go!(true, false, true, false),
            (true, Want::Both, true) => go!(true, true, true, true),
            (true, Want::One, true) => go!(true, true, false, true),
            (true, Want::Two, true) => go!(true, false, true, true),
            (false, Want::Both, false) => go!(false, true, true, false),
            (false, Want::One, false) => go!(false, true, false, false),
            (false, Want::Two, false) => go!(false, false, true, false),
            (false, Want::Both, true) => go!(false, true, true, true),
            (false, Want::One, true) => go!(false, true, false, true),
            (false, Want::Two, true) => go!(false, false, true, true),
        }
    }

    fn start<const CLASSICAL: bool, const W1: bool, const W2: bool, const CHECK: bool>(
        &self,
        task: OpeningTask,
        g1: &mut [f64],
        g2: &mut [f64],
        regions: Option<&[Option<Region>; 2]>,
    ) {
        // only the opponent's reach of a wanted product matters
        let reach: [&[f64]; 2] = [if W2 { self.x } else { &[] }, if W1 { self.y } else { &[] }];
        let mut w = Walker::<CLASSICAL, W1, W2, CHECK> {
            rules: self.rules,
            infosets: [self.tps[0].infosets(), self.tps[1].infosets()],
            children: [self.tps[0].children_raw(), self.tps[1].children_raw()],
            reach,
            g: [g1, g2],
            regions,
        };
        let mut n = Node {
            pieces: [0, 0],
            seq: [0, 0],
            next: [
                self.tps[0].root_infoset().unwrap_or(NO_INFOSET),
                self.tps[1].root_infoset().unwrap_or(NO_INFOSET),
            ],
            reach: [1.0, 1.0],
        };
        let mut pos = Position::INITIAL;
        for cell in std::iter::once(task.first).chain(task.reply) {
            let p = pos.to_move.index();
            let seq = self.tps[p]
                .sequence_of(n.next[p], Action(cell))
                .expect("opening attempts are legal at the root");
            n.seq[p] = seq;
            if !reach[p].is_empty() {
                n.reach[p] = reach[p][seq as usize];
            }
            let (outcome, step) = pos.step(self.rules, cell);
            match step {
                Step::Terminal(_, r) => {
                    if r != 0 {
                        w.terminal(&n, r as f64);
                    }
                    return;
                }
                Step::Continue(next) => {
                    n.next[p] = self.tps[p].children_raw()[seq as usize][outcome as usize];
                    pos = next;
                }
            }
        }
        n.pieces = pos.pieces;
        if w.pruned(&n) {
            return;
        }
        match pos.to_move {
            Player::One => w.walk::<0>(n),
            Player::Two => w.walk::<1>(n),
        }
    }
}

struct Walker<'a, const CLASSICAL: bool, const W1: bool, const W2: bool, const CHECK: bool> {
    rules: &'a Rules,
    infosets: [&'a [Infoset]; 2],
    children: [&'a [[u32; 2]]; 2],
    /// `x` if `g2` is wanted and `y` if `g1` is; empty otherwise.
    reach: [&'a [f64]; 2],
    g: [&'a mut [f64]; 2],
    regions: Option<&'a [Option<Region>; 2]>,
}

impl<const CLASSICAL: bool, const W1: bool, const W2: bool, const CHECK: bool>
    Walker<'_, CLASSICAL, W1, W2, CHECK>
{
    #[inline(always)]
    fn pruned(&self, n: &Node) -> bool {
        (!W1 || n.reach[1] == 0.0) && (!W2 || n.reach[0] == 0.0)
    }

    #[inline(always)]
    fn terminal(&mut self, n: &Node, reward: f64) {
        if CHECK {
            if let Some(regions) = self.regions {
                for p in 0..2 {
                    let s = n.seq[p];
                    let inside = s == 0 || regions[p].as_ref().is_none_or(|r| r.contains(s));
                    assert!(inside, "write to sequence {s} outside task region");
                }
            }
        }
        if W1 {
            self.g[0][n.seq[0] as usize] += reward * n.reach[1];
        }
        if W2 {
            self.g[1][n.seq[1] as usize] -= reward * n.reach[0];
        }
    }

    fn walk<const P: usize>(&mut self, n: Node) {
        debug_assert!((n.next[P] as usize) < self.infosets[P].len());
        // SAFETY: every `next` index comes from the treeplex's own child
        // table, which only holds valid infoset ids on nonterminal paths
        let info = unsafe { *self.infosets[P].get_unchecked(n.next[P] as usize) };
        let children = self.children[P];
        let theirs = n.pieces[1 - P];
        let track_reach = if P == 0 { W2 } else { W1 };
        let win = if P == 0 { 1.0 } else { -1.0 };
        let mut legal = info.legal;
        let mut seq = info.first_sequence;
        while legal != 0 {
            let b = legal & legal.wrapping_neg();
            legal ^= b;
            let s = seq;
            seq += 1;
            let mut c = n;
            c.seq[P] = s;
            if track_reach {
                // SAFETY: sequences of a valid infoset are in range and the
                // reach vector was length-checked against the treeplex
                c.reach[P] = unsafe { *self.reach[P].get_unchecked(s as usize) };
                if self.pruned(&c) {
                    continue;
                }
            }
            if theirs & b != 0 {
                c.next[P] = unsafe { children.get_unchecked(s as usize)[MoveOutcome::Occupied as usize] };
                if CLASSICAL {
                    self.walk::<P>(c);
                } else {
                    self.pass::<P>(c);
                }
            } else {
                let mine = n.pieces[P] | b;
                c.pieces[P] = mine;
                if self.rules.wins(P, mine) {
                    self.terminal(&c, win);
                } else if mine | theirs != self.rules.full {
                    c.next[P] = unsafe { children.get_unchecked(s as usize)[MoveOutcome::Placed as usize] };
                    self.pass::<P>(c);
                }
            }
        }
    }

    #[inline(always)]
    fn pass<const P: usize>(&mut self, c: Node) {
        if P == 0 {
            self.walk::<1>(c)
        } else {
            self.walk::<0>(c)
        }
    }
}
