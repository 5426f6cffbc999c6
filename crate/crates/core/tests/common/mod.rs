#![allow(dead_code)]

use darkgames::games::{GameSpec, Ruleset};
use darkgames::treeplex::{TabularPolicy, Treeplex};
use rand::Rng;

pub fn small_specs() -> Vec<GameSpec> {
    let mut v = Vec::new();
    for side in [1, 2] {
        for rs in [Ruleset::Classical, Ruleset::Abrupt] {
            v.push(GameSpec::dark_hex(side, rs).unwrap());
        }
    }
    v
}

/// Random behavioural policy. With probability `zero_p` an action gets no
/// mass, so that pruned subtrees are exercised too.
pub fn random_tabular(tp: &Treeplex, rng: &mut impl Rng, zero_p: f64) -> TabularPolicy {
    let mut t = TabularPolicy::uniform(tp);
    for info in tp.infosets() {
        let row = &mut t.probs[info.sequences()];
        for p in row.iter_mut() {
            *p = if rng.gen_bool(zero_p) { 0.0 } else { rng.gen::<f64>() + 1e-3 };
        }
        let k = rng.gen_range(0..row.len());
        row[k] += 1.0;
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= sum);
    }
    t
}

/// Random pure policy.
pub fn random_pure(tp: &Treeplex, rng: &mut impl Rng) -> TabularPolicy {
    let mut t = TabularPolicy::uniform(tp);
    for info in tp.infosets() {
        let row = &mut t.probs[info.sequences()];
        row.fill(0.0);
        let k = rng.gen_range(0..row.len());
        row[k] = 1.0;
    }
    t
}
