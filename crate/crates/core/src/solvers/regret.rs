//! The CFR family: regret matching at every information state.

use super::{counterfactual_values, realization_plan, uniform_probs, Solver, UpdateScheme};
use crate::error::{Error, Result};
use crate::gradient::Game;
use crate::games::Player;
use crate::treeplex::{SequenceFormStrategy, Treeplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegretVariant {
    Cfr,
    CfrPlus,
    Dcfr,
    Pcfr,
    PcfrPlus,
    Pdcfr,
}

impl RegretVariant {
    /// Regrets are clamped at zero after every update.
    pub fn clamps(self) -> bool {
        matches!(self, RegretVariant::CfrPlus | RegretVariant::PcfrPlus)
    }

    pub fn discounts(self) -> bool {
        matches!(self, RegretVariant::Dcfr | RegretVariant::Pdcfr)
    }

    pub fn predictive(self) -> bool {
        matches!(self, RegretVariant::Pcfr | RegretVariant::PcfrPlus | RegretVariant::Pdcfr)
    }

    pub fn default_averaging(self, params: &DcfrParams) -> Averaging {
        match self {
            RegretVariant::Cfr | RegretVariant::Pcfr => Averaging::Uniform,
            RegretVariant::CfrPlus | RegretVariant::PcfrPlus => Averaging::Linear,
            RegretVariant::Dcfr | RegretVariant::Pdcfr => Averaging::Power(params.gamma),
        }
    }
}

/// Discounting of discounted CFR. After the regrets of iteration `t` are
/// added, positive entries are scaled by `1 - 1/(1+t^alpha)` and negative
/// ones by `1 - 1/(1+t^beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfrParams {
    pub alpha: f64,
    pub beta: f64,
    /// Exponent of the average-strategy weights `t^gamma`.
    pub gamma: f64,
}

impl Default for DcfrParams {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            beta: 0.0,
            gamma: 2.0,
        }
    }
}

impl DcfrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.beta >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Unsupported(format!(
                "discount parameters need alpha > 0 and beta >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn positive_factor(&self, t: u64) -> f64 {
        let p = (t as f64).powf(self.alpha);
        1.0 - 1.0 / (1.0 + p)
    }

    pub fn negative_factor(&self, t: u64) -> f64 {
        let p = (t as f64).powf(self.beta);
        1.0 - 1.0 / (1.0 + p)
    }
}

/// Weight of iterate `t` (1-based) in the average strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    Uniform,
    Linear,
    Power(f64),
}

impl Averaging {
    pub fn weight(self, t: u64) -> f64 {
        match self {
            Averaging::Uniform => 1.0,
            Averaging::Linear => t as f64,
            Averaging::Power(g) => (t as f64).powf(g),
        }
    }
}

/// Normalised positive part of `r` (plus `m` when given), or uniform when
/// nothing is positive.
pub fn regret_matching(r: &[f64], m: Option<&[f64]>, out: &mut [f64]) {
    let mut total = 0.0;
    for (i, o) in out.iter_mut().enumerate() {
        let v = r[i] + m.map_or(0.0, |m| m[i]);
        *o = v.max(0.0);
        total += *o;
    }
    if total > 0.0 {
        out.iter_mut().for_each(|o| *o /= total);
    } else {
        out.fill(1.0 / out.len() as f64);
    }
}

struct Side {
    /// Cumulative regret per sequence (entry 0 unused).
    regrets: Vec<f64>,
    /// Last instantaneous regret, predictive variants only.
    prediction: Vec<f64>,
    /// Weighted sum of past realisation plans.
    accumulated: Vec<f64>,
    /// Behavioural probabilities of the current policy.
    policy: Vec<f64>,
    plan: SequenceFormStrategy,
    q: Vec<f64>,
    v: Vec<f64>,
}

pub struct RegretState {
    variant: RegretVariant,
    params: DcfrParams,
    averaging: Averaging,
    scheme: UpdateScheme,
    t: u64,
    weight_sum: f64,
    sides: [Side; 2],
}

impl RegretState {
    pub fn new(game: &Game, variant: RegretVariant, params: DcfrParams) -> Result<Self> {
        params.validate()?;
        let side = |p: Player| {
            let tp = game.treeplex(p);
            let n = tp.num_sequences();
            let policy = uniform_probs(tp);
            let mut plan = vec![0.0; n];
            realization_plan(tp, &policy, &mut plan);
            Side {
                regrets: vec![0.0; n],
                prediction: if variant.predictive() { vec![0.0; n] } else { Vec::new() },
                accumulated: vec![0.0; n],
                policy,
                plan: SequenceFormStrategy { player: p, values: plan },
                q: vec![0.0; n],
                v: vec![0.0; tp.num_infosets()],
            }
        };
        Ok(Self {
            variant,
            params,
            averaging: variant.default_averaging(&params),
            scheme: UpdateScheme::Alternating,
            t: 0,
            weight_sum: 0.0,
            sides: [side(Player::One), side(Player::Two)],
        })
    }

    pub fn with_scheme(mut self, scheme: UpdateScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_averaging(mut self, averaging: Averaging) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn variant(&self) -> RegretVariant {
        self.variant
    }

    pub fn averaging(&self) -> Averaging {
        self.averaging
    }

    /// Cumulative regrets of player `p`, indexed by sequence.
    pub fn regrets(&self, p: usize) -> &[f64] {
        &self.sides[p].regrets
    }

    /// Current behavioural probabilities of player `p`, by sequence.
    pub fn policy(&self, p: usize) -> &[f64] {
        &self.sides[p].policy
    }

    /// Regret-matching distribution at one infoset.
    pub fn regret_matching_policy(&self, tp: &Treeplex, infoset: u32) -> Vec<f64> {
        let side = &self.sides[tp.player().index()];
        let range = tp.infoset(infoset).sequences();
        let mut out = vec![0.0; range.len()];
        let m = self.variant.predictive().then(|| &side.prediction[range.clone()]);
        regret_matching(&side.regrets[range], m, &mut out);
        out
    }

    /// Applies the gradient `g` of player `p` for iteration `t`.
    fn update(&mut self, tp: &Treeplex, p: usize, g: &[f64], t: u64, weight: f64) {
        let variant = self.variant;
        let (pos, neg) = (self.params.positive_factor(t), self.params.negative_factor(t));
        let side = &mut self.sides[p];
        counterfactual_values(tp, g, &side.policy, &mut side.q, &mut side.v);
        for (a, x) in side.accumulated.iter_mut().zip(&side.plan.values) {
            *a += weight * x;
        }
        for (id, info) in tp.infosets().iter().enumerate() {
            let value = side.v[id];
            for s in info.sequences() {
                let inst = side.q[s] - value;
                let mut r = side.regrets[s] + inst;
                if variant.clamps() {
                    r = r.max(0.0);
                } else if variant.discounts() {
                    r *= if r > 0.0 { pos } else { neg };
                }
                side.regrets[s] = r;
                if variant.predictive() {
                    side.prediction[s] = inst;
                }
            }
            let range = info.sequences();
            let m = variant.predictive().then(|| &side.prediction[range.clone()]);
            regret_matching(&side.regrets[range.clone()], m, &mut side.policy[range]);
        }
        realization_plan(tp, &side.policy, &mut side.plan.values);
    }
}

impl Solver for RegretState {
    fn step(&mut self, game: &Game) -> Result<()> {
        let t = self.t + 1;
        let w = self.averaging.weight(t);
        let (tp1, tp2) = (game.treeplex(Player::One), game.treeplex(Player::Two));
        match self.scheme {
            UpdateScheme::Alternating => {
                let g1 = game.gradient_p1(&self.sides[1].plan)?;
                self.update(tp1, 0, &g1.values, t, w);
                let g2 = game.gradient_p2(&self.sides[0].plan)?;
                self.update(tp2, 1, &g2.values, t, w);
            }
            UpdateScheme::Simultaneous => {
                let (g1, g2) = game.gradients(&self.sides[0].plan, &self.sides[1].plan)?;
                self.update(tp1, 0, &g1.values, t, w);
                self.update(tp2, 1, &g2.values, t, w);
            }
        }
        self.weight_sum += w;
        self.t = t;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.t
    }

    fn average(&self, p: usize) -> SequenceFormStrategy {
        let side = &self.sides[p];
        if self.weight_sum == 0.0 {
            return side.plan.clone();
        }
        SequenceFormStrategy {
            player: side.plan.player,
            values: side.accumulated.iter().map(|a| a / self.weight_sum).collect(),
        }
    }

    fn current(&self, p: usize) -> SequenceFormStrategy {
        self.sides[p].plan.clone()
    }
}
