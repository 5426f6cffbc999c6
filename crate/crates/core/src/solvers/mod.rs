//! Tabular equilibrium solvers driven by the gradient engine.
//!
//! Every solver works on realisation plans and asks [`Game`] for `A y` and
//! `-A^T x`. Counterfactual action values are read off those gradients by a
//! single bottom-up sweep over the treeplex, so no extra tree walk is needed.

mod fp;
mod mmd;
mod regret;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use fp::FpState;
pub use mmd::{mmd_update, Magnet, MmdParams, MmdState};
pub use regret::{regret_matching, Averaging, DcfrParams, RegretState, RegretVariant};

use crate::error::{Error, Result};
use crate::gradient::Game;
use crate::treeplex::{SequenceFormStrategy, Treeplex, NO_INFOSET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Cfr,
    CfrPlus,
    Dcfr,
    Pcfr,
    PcfrPlus,
    Pdcfr,
    Fp,
    Mmd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Cfr,
        Algorithm::CfrPlus,
        Algorithm::Dcfr,
        Algorithm::Pcfr,
        Algorithm::PcfrPlus,
        Algorithm::Pdcfr,
        Algorithm::Fp,
        Algorithm::Mmd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cfr => "cfr",
            Algorithm::CfrPlus => "cfr+",
            Algorithm::Dcfr => "dcfr",
            Algorithm::Pcfr => "pcfr",
            Algorithm::PcfrPlus => "pcfr+",
            Algorithm::Pdcfr => "pdcfr",
            Algorithm::Fp => "fp",
            Algorithm::Mmd => "mmd",
        }
    }

    pub fn regret_variant(self) -> Option<RegretVariant> {
        Some(match self {
            Algorithm::Cfr => RegretVariant::Cfr,
            Algorithm::CfrPlus => RegretVariant::CfrPlus,
            Algorithm::Dcfr => RegretVariant::Dcfr,
            Algorithm::Pcfr => RegretVariant::Pcfr,
            Algorithm::PcfrPlus => RegretVariant::PcfrPlus,
            Algorithm::Pdcfr => RegretVariant::Pdcfr,
            Algorithm::Fp | Algorithm::Mmd => return None,
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Unsupported(format!("unknown algorithm `{s}`")))
    }
}

/// Who sees whose strategy within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateScheme {
    /// Player one updates first; player two then responds to player one's
    /// refreshed strategy.
    #[default]
    Alternating,
    Simultaneous,
}

/// Everything needed to build a solver.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub scheme: UpdateScheme,
    pub dcfr: DcfrParams,
    /// Overrides the variant's default averaging weights.
    pub averaging: Option<Averaging>,
    pub mmd: MmdParams,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            scheme: UpdateScheme::default(),
            dcfr: DcfrParams::default(),
            averaging: None,
            mmd: MmdParams::default(),
        }
    }

    pub fn build(&self, game: &Game) -> Result<Box<dyn Solver>> {
        Ok(match self.algorithm {
            Algorithm::Fp => Box::new(FpState::new(game)),
            Algorithm::Mmd => Box::new(MmdState::new(game, self.mmd.clone())?),
            a => {
                let variant = a.regret_variant().expect("regret algorithm");
                let mut s = RegretState::new(game, variant, self.dcfr)?.with_scheme(self.scheme);
                if let Some(avg) = self.averaging {
                    s = s.with_averaging(avg);
                }
                Box::new(s)
            }
        })
    }
}

/// Common driver interface of all solvers.
pub trait Solver {
    /// Runs one iteration.
    fn step(&mut self, game: &Game) -> Result<()>;

    /// Completed iterations.
    fn iterations(&self) -> u64;

    /// Normalised average strategy of one player (index 0 or 1).
    fn average(&self, p: usize) -> SequenceFormStrategy;

    /// Strategy played in the next iteration.
    fn current(&self, p: usize) -> SequenceFormStrategy;
}

/// One line of a solver log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: u64,
    /// Player-one value of the average profile.
    pub value: f64,
    pub nash_gap: f64,
    pub exploitability: f64,
    /// Elapsed time since the run started. Not deterministic; everything
    /// else in a row is.
    pub wall_seconds: f64,
}

impl LogRow {
    /// Equality of the deterministic fields, bit for bit.
    pub fn same_numbers(&self, other: &LogRow) -> bool {
        self.iteration == other.iteration
            && self.value.to_bits() == other.value.to_bits()
            && self.nash_gap.to_bits() == other.nash_gap.to_bits()
            && self.exploitability.to_bits() == other.exploitability.to_bits()
    }
}

pub struct SolverRun {
    pub average: [SequenceFormStrategy; 2],
    pub last: [SequenceFormStrategy; 2],
    pub log: Vec<LogRow>,
}

/// Runs `iterations` iterations, evaluating the average profile every
/// `report_every` iterations and after the last one.
pub fn run_solver(game: &Game, config: &SolverConfig, iterations: u64, report_every: u64) -> Result<SolverRun> {
    let mut solver = config.build(game)?;
    run_with(game, solver.as_mut(), iterations, report_every, |_| {})
}

/// Like [`run_solver`] on an existing solver, handing each log row to
/// `on_report` as soon as it is known.
pub fn run_with(
    game: &Game,
    solver: &mut dyn Solver,
    iterations: u64,
    report_every: u64,
    mut on_report: impl FnMut(&LogRow),
) -> Result<SolverRun> {
    if iterations == 0 {
        return Err(Error::Unsupported("at least one iteration is required".into()));
    }
    let start = Instant::now();
    let mut log = Vec::new();
    for _ in 0..iterations {
        solver.step(game)?;
        let t = solver.iterations();
        if t == iterations || (report_every > 0 && t.is_multiple_of(report_every)) {
            let x = solver.average(0);
            let y = solver.average(1);
            let e = game.evaluate(&x, &y)?;
            let row = LogRow {
                iteration: t,
                value: e.value,
                nash_gap: e.nash_gap,
                exploitability: e.exploitability(),
                wall_seconds: start.elapsed().as_secs_f64(),
            };
            on_report(&row);
            log.push(row);
        }
    }
    Ok(SolverRun {
        average: [solver.average(0), solver.average(1)],
        last: [solver.current(0), solver.current(1)],
        log,
    })
}

/// Counterfactual action values `q` (per sequence) and infoset values
/// (per infoset) of behavioural policy `pi` against gradient `g`.
pub fn counterfactual_values(tp: &Treeplex, g: &[f64], pi: &[f64], q: &mut [f64], v: &mut [f64]) {
    let children = tp.children_raw();
    for id in (0..tp.num_infosets()).rev() {
        let info = tp.infosets()[id];
        let mut total = 0.0;
        for s in info.sequences() {
            let mut qs = g[s];
            for c in children[s] {
                if c != NO_INFOSET {
                    qs += v[c as usize];
                }
            }
            q[s] = qs;
            total += pi[s] * qs;
        }
        v[id] = total;
    }
}

/// Realisation plan of per-sequence behavioural probabilities.
pub(crate) fn realization_plan(tp: &Treeplex, pi: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for info in tp.infosets() {
        let reach = out[info.parent_sequence as usize];
        for s in info.sequences() {
            out[s] = reach * pi[s];
        }
    }
}

pub(crate) fn uniform_probs(tp: &Treeplex) -> Vec<f64> {
    crate::treeplex::TabularPolicy::uniform(tp).probs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GameSpec, Player, Ruleset};
    use crate::treeplex::{tabular_to_sequence_form, TabularPolicy};

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("cfr++".parse::<Algorithm>().is_err());
    }

    #[test]
    fn counterfactual_values_give_expected_value() {
        let spec = GameSpec::dark_hex(2, Ruleset::Classical).unwrap();
        let game = Game::new(&spec).unwrap().with_threads(1);
        let tp1 = game.treeplex(Player::One);
        let tp2 = game.treeplex(Player::Two);
        let pi = TabularPolicy::uniform(tp1);
        let x = tabular_to_sequence_form(tp1, &pi);
        let y = tabular_to_sequence_form(tp2, &TabularPolicy::uniform(tp2));
        let g1 = game.gradient_p1(&y).unwrap();
        let mut q = vec![0.0; tp1.num_sequences()];
        let mut v = vec![0.0; tp1.num_infosets()];
        counterfactual_values(tp1, &g1.values, &pi.probs, &mut q, &mut v);
        let root = tp1.root_infoset().unwrap() as usize;
        let ev = game.expected_value(&x, &y).unwrap();
        assert!((g1.values[0] + v[root] - ev).abs() < 1e-12);
    }
}
