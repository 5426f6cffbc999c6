//! Magnetic mirror descent in self-play.

use super::{counterfactual_values, realization_plan, uniform_probs, Solver};
use crate::error::{Error, Result};
use crate::gradient::Game;
use crate::games::Player;
use crate::treeplex::{SequenceFormStrategy, TabularPolicy};

/// Regularisation target.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Magnet {
    #[default]
    Uniform,
    /// One policy per player.
    Tabular(Box<[TabularPolicy; 2]>),
}

#[derive(Debug, Clone)]
pub struct MmdParams {
    /// Magnet temperature.
    pub alpha: f64,
    /// Step size.
    pub eta: f64,
    pub magnet: Magnet,
    /// Optional `(alpha, eta)` for iteration `t` (1-based), replacing the
    /// constants above.
    pub schedule: Option<fn(u64) -> (f64, f64)>,
}

impl Default for MmdParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            eta: 0.1,
            magnet: Magnet::Uniform,
            schedule: None,
        }
    }
}

impl MmdParams {
    fn at(&self, t: u64) -> (f64, f64) {
        self.schedule.map_or((self.alpha, self.eta), |f| f(t))
    }
}

fn check_coefficients(alpha: f64, eta: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite() && eta > 0.0 && eta.is_finite()) {
        return Err(Error::Unsupported(format!(
            "mirror descent needs alpha >= 0 and eta > 0, got {alpha} and {eta}"
        )));
    }
    Ok(())
}

/// Maximiser of `E q - alpha KL(pi, magnet) - KL(pi, current) / eta` over
/// the simplex:
/// `pi(a) ∝ exp((eta q(a) + eta alpha log magnet(a) + log current(a)) / (1 + eta alpha))`.
pub fn mmd_update(alpha: f64, eta: f64, q: &[f64], current: &[f64], magnet: &[f64]) -> Result<Vec<f64>> {
    check_coefficients(alpha, eta)?;
    let mut out = vec![0.0; q.len()];
    update_into(alpha, eta, q, current, magnet, &mut out)?;
    Ok(out)
}

fn update_into(alpha: f64, eta: f64, q: &[f64], current: &[f64], magnet: &[f64], out: &mut [f64]) -> Result<()> {
    if let Some(p) = current.iter().chain(magnet).find(|&&p| !(p > 0.0)) {
        return Err(Error::BadDistribution {
            key: String::new(),
            reason: format!("mirror descent needs strictly positive probabilities, got {p}"),
        });
    }
    let scale = 1.0 / (1.0 + eta * alpha);
    let mut top = f64::NEG_INFINITY;
    for i in 0..q.len() {
        out[i] = (eta * q[i] + eta * alpha * magnet[i].ln() + current[i].ln()) * scale;
        top = top.max(out[i]);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - top).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(())
}

struct Side {
    policy: Vec<f64>,
    next: Vec<f64>,
    magnet: Vec<f64>,
    plan: SequenceFormStrategy,
    accumulated: Vec<f64>,
    q: Vec<f64>,
    v: Vec<f64>,
}

pub struct MmdState {
    params: MmdParams,
    t: u64,
    sides: [Side; 2],
    last_kl: f64,
}

impl MmdState {
    pub fn new(game: &Game, params: MmdParams) -> Result<Self> {
        check_coefficients(params.alpha, params.eta)?;
        let side = |p: Player| -> Result<Side> {
            let tp = game.treeplex(p);
            let n = tp.num_sequences();
            let magnet = match &params.magnet {
                Magnet::Uniform => uniform_probs(tp),
                Magnet::Tabular(t) => {
                    let m = &t[p.index()];
                    tp.check_len(m.probs.len())?;
                    m.probs.clone()
                }
            };
            let policy = uniform_probs(tp);
            let mut plan = vec![0.0; n];
            realization_plan(tp, &policy, &mut plan);
            Ok(Side {
                next: policy.clone(),
                policy,
                magnet,
                plan: SequenceFormStrategy { player: p, values: plan },
                accumulated: vec![0.0; n],
                q: vec![0.0; n],
                v: vec![0.0; tp.num_infosets()],
            })
        };
        Ok(Self {
            sides: [side(Player::One)?, side(Player::Two)?],
            params,
            t: 0,
            last_kl: f64::INFINITY,
        })
    }

    /// `sum over infosets of KL(pi_{t+1}, pi_t)` of the last step, both
    /// players together.
    pub fn last_kl(&self) -> f64 {
        self.last_kl
    }

    /// Current behavioural probabilities of player `p`, by sequence.
    pub fn policy(&self, p: usize) -> &[f64] {
        &self.sides[p].policy
    }
}

impl Solver for MmdState {
    fn step(&mut self, game: &Game) -> Result<()> {
        let t = self.t + 1;
        let (alpha, eta) = self.params.at(t);
        check_coefficients(alpha, eta)?;
        let (g1, g2) = game.gradients(&self.sides[0].plan, &self.sides[1].plan)?;
        let mut kl = 0.0;
        for (p, g) in [(Player::One, &g1.values), (Player::Two, &g2.values)] {
            let tp = game.treeplex(p);
            let side = &mut self.sides[p.index()];
            counterfactual_values(tp, g, &side.policy, &mut side.q, &mut side.v);
            for (a, x) in side.accumulated.iter_mut().zip(&side.plan.values) {
                *a += x;
            }
            for info in tp.infosets() {
                let r = info.sequences();
                update_into(
                    alpha,
                    eta,
                    &side.q[r.clone()],
                    &side.policy[r.clone()],
                    &side.magnet[r.clone()],
                    &mut side.next[r.clone()],
                )?;
                for s in r {
                    kl += side.next[s] * (side.next[s] / side.policy[s]).ln();
                }
            }
            std::mem::swap(&mut side.policy, &mut side.next);
            realization_plan(tp, &side.policy, &mut side.plan.values);
        }
        self.last_kl = kl;
        self.t = t;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.t
    }

    fn average(&self, p: usize) -> SequenceFormStrategy {
        let side = &self.sides[p];
        if self.t == 0 {
            return side.plan.clone();
        }
        SequenceFormStrategy {
            player: side.plan.player,
            values: side.accumulated.iter().map(|a| a / self.t as f64).collect(),
        }
    }

    fn current(&self, p: usize) -> SequenceFormStrategy {
        self.sides[p].plan.clone()
    }
}
