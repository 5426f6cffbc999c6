//! Brute-force reference computations over the explicit game tree.
//!
//! Nothing here touches treeplexes or the gradient walker: information
//! states are aggregated from scratch with hash maps keyed by
//! [`InfoStateKey`], so agreement with the sequence-form pipeline is an
//! independent check. Only meant for small games.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::games::{Action, GameSpec, GameState, InfoStateKey, Player};
use crate::treeplex::{normalize, BehavioralPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_histories: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_histories: 10_000_000,
        }
    }
}

impl OracleLimits {
    /// Fails once the explicit tree is known to exceed the limit.
    pub fn check(&self, spec: &GameSpec) -> Result<u64> {
        fn walk(s: &GameState, budget: &mut u64, limit: u64) -> Result<()> {
            if *budget == 0 {
                return Err(Error::LimitExceeded { limit });
            }
            *budget -= 1;
            if s.is_terminal() {
                return Ok(());
            }
            for a in s.legal_actions()? {
                walk(&s.apply_action(a)?, budget, limit)?;
            }
            Ok(())
        }
        let mut budget = self.max_histories;
        walk(&GameState::initial(*spec)?, &mut budget, self.max_histories)?;
        Ok(self.max_histories - budget)
    }
}

fn query(pi: &dyn BehavioralPolicy, key: &InfoStateKey, legal: &[Action]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; legal.len()];
    pi.action_probabilities(key, legal, &mut out)?;
    normalize(key, &mut out)?;
    Ok(out)
}

/// Exact `J(pi1, pi2)` by recursion over every history.
pub fn oracle_expected_value(
    spec: &GameSpec,
    pi1: &dyn BehavioralPolicy,
    pi2: &dyn BehavioralPolicy,
    limits: OracleLimits,
) -> Result<f64> {
    limits.check(spec)?;
    fn value(s: &GameState, pis: [&dyn BehavioralPolicy; 2]) -> Result<f64> {
        if let Some(r) = s.terminal_reward() {
            return Ok(r as f64);
        }
        let p = s.acting_player();
        let legal = s.legal_actions()?;
        let probs = query(pis[p.index()], &s.info_state_key(p), &legal)?;
        let mut v = 0.0;
        for (a, pr) in legal.into_iter().zip(probs) {
            if pr > 0.0 {
                v += pr * value(&s.apply_action(a)?, pis)?;
            }
        }
        Ok(v)
    }
    value(&GameState::initial(*spec)?, [pi1, pi2])
}

/// Best response of `responder` to a fixed opponent policy.
#[derive(Debug, Clone)]
pub struct OracleBestResponse {
    /// Best achievable expected return, in the responder's own payoff.
    pub value: f64,
    /// Chosen action at every responder information state.
    pub policy: BTreeMap<InfoStateKey, Action>,
}

impl BehavioralPolicy for OracleBestResponse {
    fn action_probabilities(&self, key: &InfoStateKey, legal: &[Action], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        let pick = self.policy.get(key).copied().unwrap_or(legal[0]);
        let i = legal.iter().position(|&a| a == pick).ok_or_else(|| Error::BadDistribution {
            key: key.to_string(),
            reason: format!("action {pick} not legal"),
        })?;
        out[i] = 1.0;
        Ok(())
    }
}

/// Responder's own last sequence: `None` before their first move.
type Seq = Option<(InfoStateKey, Action)>;

#[derive(Default)]
struct Aggregate {
    /// Opponent-reach weighted payoff of terminals per responder sequence.
    payoff: HashMap<Seq, f64>,
    /// Responder keys reachable right after each responder sequence.
    next: HashMap<Seq, BTreeSet<InfoStateKey>>,
    legal: HashMap<InfoStateKey, Vec<Action>>,
}

pub fn oracle_best_response(
    spec: &GameSpec,
    opponent: &dyn BehavioralPolicy,
    responder: Player,
    limits: OracleLimits,
) -> Result<OracleBestResponse> {
    limits.check(spec)?;
    let sign = if responder == Player::One { 1.0 } else { -1.0 };

    fn collect(
        s: &GameState,
        last: &Seq,
        reach: f64,
        responder: Player,
        sign: f64,
        opponent: &dyn BehavioralPolicy,
        agg: &mut Aggregate,
    ) -> Result<()> {
        if let Some(r) = s.terminal_reward() {
            *agg.payoff.entry(last.clone()).or_default() += reach * sign * r as f64;
            return Ok(());
        }
        let p = s.acting_player();
        let legal = s.legal_actions()?;
        let key = s.info_state_key(p);
        if p == responder {
            agg.next.entry(last.clone()).or_default().insert(key.clone());
            agg.legal.insert(key.clone(), legal.clone());
            for a in legal {
                let seq = Some((key.clone(), a));
                collect(&s.apply_action(a)?, &seq, reach, responder, sign, opponent, agg)?;
            }
        } else {
            let probs = query(opponent, &key, &legal)?;
            for (a, pr) in legal.into_iter().zip(probs) {
                collect(&s.apply_action(a)?, last, reach * pr, responder, sign, opponent, agg)?;
            }
        }
        Ok(())
    }

    let mut agg = Aggregate::default();
    collect(
        &GameState::initial(*spec)?,
        &None,
        1.0,
        responder,
        sign,
        opponent,
        &mut agg,
    )?;

    // backward induction over the responder's own key tree
    fn solve(
        key: &InfoStateKey,
        agg: &Aggregate,
        memo: &mut HashMap<InfoStateKey, f64>,
        policy: &mut BTreeMap<InfoStateKey, Action>,
    ) -> f64 {
        if let Some(&v) = memo.get(key) {
            return v;
        }
        let mut best: Option<(f64, Action)> = None;
        for &a in &agg.legal[key] {
            let seq = Some((key.clone(), a));
            let mut v = agg.payoff.get(&seq).copied().unwrap_or(0.0);
            if let Some(children) = agg.next.get(&seq) {
                for child in children {
                    v += solve(child, agg, memo, policy);
                }
            }
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, a));
            }
        }
        let (v, a) = best.expect("responder infosets have legal actions");
        memo.insert(key.clone(), v);
        policy.insert(key.clone(), a);
        v
    }

    let mut memo = HashMap::new();
    let mut policy = BTreeMap::new();
    let mut value = agg.payoff.get(&None).copied().unwrap_or(0.0);
    if let Some(roots) = agg.next.get(&None) {
        for root in roots {
            value += solve(root, &agg, &mut memo, &mut policy);
        }
    }
    Ok(OracleBestResponse { value, policy })
}

/// Half the summed best-response values of both seats.
pub fn oracle_exploitability(
    spec: &GameSpec,
    pi1: &dyn BehavioralPolicy,
    pi2: &dyn BehavioralPolicy,
    limits: OracleLimits,
) -> Result<f64> {
    let br1 = oracle_best_response(spec, pi2, Player::One, limits)?.value;
    let br2 = oracle_best_response(spec, pi1, Player::Two, limits)?.value;
    Ok((br1 + br2) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Ruleset;
    use crate::treeplex::UniformPolicy;

    #[test]
    fn dark_hex_one() {
        let spec = GameSpec::dark_hex(1, Ruleset::Classical).unwrap();
        let lim = OracleLimits::default();
        assert_eq!(oracle_expected_value(&spec, &UniformPolicy, &UniformPolicy, lim).unwrap(), 1.0);
        let br = oracle_best_response(&spec, &UniformPolicy, Player::One, lim).unwrap();
        assert_eq!(br.value, 1.0);
        let br = oracle_best_response(&spec, &UniformPolicy, Player::Two, lim).unwrap();
        assert_eq!(br.value, -1.0);
        assert_eq!(oracle_exploitability(&spec, &UniformPolicy, &UniformPolicy, lim).unwrap(), 0.0);
    }

    #[test]
    fn large_game_rejected() {
        let spec = GameSpec::phantom_ttt(Ruleset::Classical);
        let lim = OracleLimits { max_histories: 10_000 };
        assert!(matches!(
            oracle_expected_value(&spec, &UniformPolicy, &UniformPolicy, lim),
            Err(Error::LimitExceeded { limit: 10_000 })
        ));
    }

    #[test]
    fn best_response_beats_uniform_play() {
        let spec = GameSpec::dark_hex(2, Ruleset::Classical).unwrap();
        let lim = OracleLimits::default();
        let v = oracle_expected_value(&spec, &UniformPolicy, &UniformPolicy, lim).unwrap();
        let br = oracle_best_response(&spec, &UniformPolicy, Player::One, lim).unwrap();
        assert!(br.value >= v);
        // playing the best response realises its value
        let realised = oracle_expected_value(&spec, &br, &UniformPolicy, lim).unwrap();
        assert!((realised - br.value).abs() < 1e-12);
    }
}
